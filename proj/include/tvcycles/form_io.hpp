#pragma once

// Form files: one JSON object
//   {"format":"tvcycles-form","version":1,"n":..,"degree":..,"dims":[..],
//    "lengths":[..],"encoding":"base64-f64le","values":"..."}
// The payload is the coefficient vector in cell order, little-endian
// doubles, standard base64. Readers also accept "encoding":"json" with a
// plain number array, which is convenient for hand-written inputs.

#include "tvcycles/grid.hpp"

#include <filesystem>
#include <string>

namespace tvcycles {

std::string form_to_string(const DiscreteForm& form);
/// Throws std::invalid_argument on malformed content.
DiscreteForm form_from_string(const std::string& text);

void write_form(const std::filesystem::path& path, const DiscreteForm& form);
DiscreteForm read_form(const std::filesystem::path& path);

std::string encode_f64_base64(const Eigen::VectorXd& values);
Eigen::VectorXd decode_f64_base64(const std::string& text);

} // namespace tvcycles
