#pragma once

#include <cmath>

namespace marsma {

// dB/dBm inputs are converted to linear watts at parse time; all internal
// math runs in linear units.

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double dbm_to_watts(double dbm) { return 1e-3 * db_to_linear(dbm); }

inline double watts_to_dbm(double watts) { return linear_to_db(watts / 1e-3); }

}  // namespace marsma
