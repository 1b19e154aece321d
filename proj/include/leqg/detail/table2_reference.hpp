#pragma once

#include <array>
#include <limits>

namespace leqg::detail {

// The published single-run table for the bundled scalar instance, frozen for
// the reproduction digest and the tests. Column order matches the trajectory
// export:
//   t, x_P, x_Pstar, P, p, r, V, u_star, gamma_star, eta_star,
//   B1, B2, B3, C, det_negH.
// The two state columns and everything evaluated along them (V, controls)
// come from one unpublished random realization; only the deterministic
// columns (P, p, r, B1, B2, B3, C, det_negH) are expected to reproduce.
// Blank cells of the published table are NaN here.
inline constexpr double kRefBlank = std::numeric_limits<double>::quiet_NaN();

inline constexpr int kRefRows = 26;
inline constexpr int kRefCols = 15;

inline constexpr std::array<std::array<double, kRefCols>, kRefRows>
    kTable2Reference = {{
        {0, 1.0000, 1.0000, 4.5811, 0.0000, 17.3880, 19.6786, 0.0270, -0.4156,
         -0.0000, kRefBlank, kRefBlank, kRefBlank, kRefBlank, kRefBlank},
        {1, -0.2655, -0.6782, 4.5811, 0.0000, 16.6894, 17.7430, -0.0183,
         0.2818, 0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {2, -0.1205, 0.2024, 4.5811, 0.0000, 15.9909, 16.0847, 0.0055, -0.0841,
         -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {3, -0.0357, -0.1270, 4.5811, 0.0000, 15.2923, 15.3293, -0.0034,
         0.0528, 0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {4, -0.0629, 0.0018, 4.5811, 0.0000, 14.5938, 14.5938, 0.0000, -0.0007,
         -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {5, -0.0581, -0.1008, 4.5811, 0.0000, 13.8952, 13.9185, -0.0027,
         0.0419, 0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {6, 0.0225, 0.1376, 4.5811, 0.0000, 13.1967, 13.2400, 0.0037, -0.0572,
         -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {7, 0.3837, 0.2704, 4.5811, 0.0000, 12.4981, 12.6655, 0.0073, -0.1123,
         -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {8, 0.2583, 0.1856, 4.5811, 0.0000, 11.7995, 11.8785, 0.0050, -0.0771,
         -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {9, -0.3427, -0.3417, 4.5811, 0.0000, 11.1010, 11.3685, -0.0092,
         0.1420, -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {10, 0.0247, 0.2576, 4.5811, 0.0000, 10.4024, 10.5544, 0.0070, -0.1070,
         0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {11, 0.0176, -0.1256, 4.5811, 0.0000, 9.7039, 9.7400, -0.0034, 0.0522,
         -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {12, 0.0367, 0.0863, 4.5811, 0.0000, 9.0053, 9.0224, 0.0023, -0.0359,
         -0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {13, 0.0111, -0.1089, 4.5811, 0.0000, 8.3067, 8.3339, -0.0029, 0.0453,
         0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {14, 0.1961, 0.3188, 4.5811, 0.0000, 7.6082, 7.8409, 0.0086, -0.1325,
         0.0000, 4.7330, -2.0855, -1.9337, 1.8324, 0.6749},
        {15, -0.0315, -0.1993, 4.5811, 0.0000, 6.9096, 7.0006, -0.0054, 0.0828,
         -0.0000, 4.7330, -2.0856, -1.9337, 1.8324, 0.6750},
        {16, -0.1065, 0.0364, 4.5811, 0.0000, 6.2111, 6.2141, 0.0010, -0.0151,
         0.0000, 4.7330, -2.0856, -1.9337, 1.8324, 0.6751},
        {17, 0.1562, 0.1640, 4.5810, 0.0000, 5.5125, 5.5741, 0.0044, -0.0681,
         -0.0000, 4.7330, -2.0857, -1.9337, 1.8324, 0.6755},
        {18, -0.0318, -0.1949, 4.5807, 0.0000, 4.8140, 4.9010, -0.0052, 0.0809,
         -0.0000, 4.7329, -2.0860, -1.9338, 1.8323, 0.6765},
        {19, -0.0052, 0.0639, 4.5800, 0.0000, 4.1156, 4.1249, 0.0017, -0.0265,
         0.0000, 4.7328, -2.0867, -1.9339, 1.8320, 0.6792},
        {20, -0.0517, -0.0946, 4.5780, 0.0000, 3.4173, 3.4378, -0.0025, 0.0392,
         0.0000, 4.7325, -2.0887, -1.9342, 1.8312, 0.6867},
        {21, 0.1290, 0.2099, 4.5725, 0.0000, 2.7195, 2.8202, 0.0051, -0.0863,
         0.0000, 4.7316, -2.0942, -1.9351, 1.8290, 0.7073},
        {22, 0.0813, -0.0077, 4.5573, 0.0000, 2.0230, 2.0231, -0.0001, 0.0031,
         -0.0000, 4.7292, -2.1094, -1.9375, 1.8229, 0.7638},
        {23, 0.2333, 0.2933, 4.5150, 0.0000, 1.3302, 1.5244, 0.0015, -0.1122,
         -0.0000, 4.7224, -2.1516, -1.9443, 1.8060, 0.9217},
        {24, 0.0781, -0.0031, 4.3929, 0.0000, 0.6480, 0.6480, 0.0001, 0.0010,
         0.0000, 4.7029, -2.2738, -1.9638, 1.7571, 1.3778},
        {25, 0.2215, 0.2497, 4.0000, 0.0000, 0.0000, 0.1247, kRefBlank,
         kRefBlank, kRefBlank, 4.6400, -2.6667, -2.0267, 1.6000, 2.8444},
    }};

// Indices of the deterministic columns within a reference row.
inline constexpr std::array<int, 8> kRefDeterministicCols = {3, 4,  5,  10,
                                                            11, 12, 13, 14};

inline constexpr std::array<const char*, kRefCols> kRefColumnNames = {
    "t",  "x_P", "x_Pstar",    "P",        "p",  "r",  "V", "u_star",
    "gamma_star", "eta_star", "B1", "B2", "B3", "C",  "det_negH"};

}  // namespace leqg::detail
