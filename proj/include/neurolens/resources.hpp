#pragma once

#include <string_view>

namespace neurolens {

/// Contents of schemas/findings.schema.json, compiled into the library.
std::string_view findings_schema_text();

/// Contents of data/atlas_lexicon.txt: one anatomical region name per line.
std::string_view atlas_lexicon_text();

}  // namespace neurolens
