#pragma once

#include <array>

// Hand-evaluated SPL / SoftSPL values.
struct MetricCase {
    double d_init, d_T, s, p;
    bool success;
    double spl, soft_spl;
};

inline constexpr std::array<MetricCase, 20> kMetricCases{{
    {10, 5, 8, 16, false, 0, 0.25},
    {10, 0, 8, 8, true, 1, 1},
    {10, 15, 8, 8, false, 0, -0.5},
    {4, 0.1, 4, 4, true, 1, 0.975},
    {4, 0.2, 4, 5, true, 0.8, 0.76},
    {5, 10, 5, 10, false, 0, -0.5},
    {2, 6, 2, 4, false, 0, -1},
    {3, 3, 3, 3, false, 0, 0},
    {8, 2, 6, 12, false, 0, 0.375},
    {6, 0.15, 6, 7.5, true, 0.8, 0.78},
    {2, 0.05, 2, 2.5, true, 0.8, 0.78},
    {1, 0.2, 1, 1, true, 1, 0.8},
    {10, 1, 5, 4, false, 0, 0.9},
    {10, 12.5, 10, 20, false, 0, -0.125},
    {2.5, 0, 2.5, 5, true, 0.5, 0.5},
    {4, 1, 2, 8, false, 0, 0.1875},
    {4, 0.1, 3, 3.75, true, 0.8, 0.78},
    {5, 7.5, 4, 4, false, 0, -0.5},
    {8, 0, 8, 32, true, 0.25, 0.25},
    {1, 3, 1, 1, false, 0, -2},
}};
