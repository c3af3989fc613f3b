#pragma once

#include <filesystem>
#include <string>

#include "ticketlab/pruner.hpp"

namespace ticketlab {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ticket container, version 1 ("TKTB"): little-endian, per-layer dims,
/// row-major LSB-first mask bitmaps, and the full w_init (weights and
/// biases) as 64-bit floats. Byte layout documented in docs/formats.md and
/// stable across tool versions.
void save_ticket(const std::filesystem::path& path, const Ticket& ticket);
Ticket load_ticket(const std::filesystem::path& path);

std::string serialize_ticket(const Ticket& ticket);
Ticket deserialize_ticket(std::string_view bytes);

/// Write-then-rename so partial sweeps never leave a torn file behind.
void atomic_write(const std::filesystem::path& path, std::string_view contents);

}  // namespace ticketlab
