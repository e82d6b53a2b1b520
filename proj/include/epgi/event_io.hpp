#pragma once

#include <string>

#include "epgi/event_model.hpp"

namespace epgi {

/// Binary event stream files. Layout (all integers little-endian):
///   magic "EPGI" | version u16 | duration_ps u64 | count u64 | kind u8 |
///   field of view 4 x f32 (x_min y_min x_max y_max, um) | records.
/// kind 0 = photon (record: t u64 ps), kind 1 = electron (record: t u64 ps,
/// x f32, y f32). write -> read round-trips bit-identically.
void write_events(const std::string& path, const ElectronStream& stream);
void write_events(const std::string& path, const PhotonStream& stream);

ElectronStream read_electron_events(const std::string& path);
PhotonStream read_photon_events(const std::string& path);

}  // namespace epgi
