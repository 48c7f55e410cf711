#pragma once

// Self-contained validation suites. Each returns a JSON report with a
// top-level "pass" flag and one entry per check.

#include "eki/config.hpp"

#include <cstdint>

namespace eki {

struct FieldSuiteOptions {
    std::size_t grid = 50;
    int samples = 2000;
    std::uint64_t seed = 7;
    double length = 0.2;
    double nu = 3.0;
};

struct CemSuiteOptions {
    int rings = 36;  // inversion mesh resolution; the refined mesh doubles it
    int electrodes = 16;
    double coverage = 0.5;
    double contact_impedance = 0.01;
    double current = 0.1;
};

Json field_suite(const FieldSuiteOptions& opt = {});
Json cem_suite(const CemSuiteOptions& opt = {});
Json tempering_suite();

} // namespace eki
