#pragma once

#include "ifs/sweep.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifs {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DiagnosticDefaults {
    std::optional<double> probe;
    std::size_t order = 2;
    std::optional<double> window;
    /// Empty means the dyadic default over the grid length.
    std::vector<double> ladder;
};

struct ConfigDocument {
    SweepSpec spec;
    DiagnosticDefaults diagnostic;
    std::string output = "-";
};

/// Parses `weight_log`, `derivative_log`, `constant(c)`, `scaled(t, P)` and
/// `sum(P, Q)`.
Potential parse_potential(std::string_view source);

/// Parses a JSON document and dry-run binds the family at the interval
/// midpoints. Throws ConfigError (or ParseError for expressions).
ConfigDocument parse_config(std::string_view text);
ConfigDocument load_config(const std::string& path);

std::string dump_config(const ConfigDocument& doc);

/// Preset wrapped as a document with default diagnostic settings.
ConfigDocument preset_document(std::string_view name);

} // namespace ifs
