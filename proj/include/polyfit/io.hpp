#ifndef POLYFIT_IO_HPP
#define POLYFIT_IO_HPP

#include <optional>
#include <string>

#include "polyfit/paramnet.hpp"
#include "polyfit/trainer.hpp"

namespace polyfit {

/// Decimal rendering at 17 significant digits: parses back to the same
/// double and re-renders to the same bytes.
std::string format_g17(double x);

/// Whole-file atomic write: temp file in the same directory, then rename.
void atomic_write_file(const std::string& path, const std::string& content);

/// Throws UsageError when the file is missing or unreadable.
std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

/// A fitted model: the polytope (for parameterized models, the emission at
/// the theta-box center) plus the optional networks.
struct ModelDocument {
  Polytope polytope;
  std::optional<MlpParams> mlp;
};

std::string write_model_doc(const ModelDocument& model);
ModelDocument parse_model_doc(const std::string& text);

std::string history_csv(const TrainHistory& history);
std::string eval_csv(const TrainHistory& history);

}  // namespace polyfit

#endif  // POLYFIT_IO_HPP
