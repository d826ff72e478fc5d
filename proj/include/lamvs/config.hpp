#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lamvs/fusion.hpp"
#include "lamvs/pipeline.hpp"

namespace lamvs {

// One document holding everything a run needs; every field can be
// overridden from the CLI.
struct RunConfig {
  CascadeConfig cascade;
  FilterConfig filter;
  int threads = 1;

  std::vector<std::pair<std::string, std::string>> echo() const;
};

void write_config_file(const std::string& path, const RunConfig& cfg);
RunConfig read_config_file(const std::string& path);

// Run manifest: config echo plus free-form entries (seeds, plans, timings).
void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& extra);

}  // namespace lamvs
