#pragma once

namespace matforge::data {

// Default data files embedded at build time; the CLI can point at
// replacements on disk.
const char* fixtures_text();
const char* cluster_text();
const char* pseudo_text();

}  // namespace matforge::data
