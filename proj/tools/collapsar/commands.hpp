#pragma once

#include <optional>
#include <string>

#include "run.hpp"

namespace collapsar::cli {

/// Flags beyond the shared ones; empty means "not given".
struct ExtraFlags {
  std::string kind;
  std::string data;
  std::string checkpoint;
  std::string value;
  std::string systems;
  std::string lengths;
};

int cmd_gen(const RunOptions& opts, const ExtraFlags& extra);
int cmd_train(const RunOptions& opts, const ExtraFlags& extra);
int cmd_eval(const RunOptions& opts, const ExtraFlags& extra);
int cmd_encode(const RunOptions& opts, const ExtraFlags& extra);
int cmd_analyze(const RunOptions& opts, const ExtraFlags& extra);
int cmd_simulate(const RunOptions& opts, const ExtraFlags& extra);

}  // namespace collapsar::cli
