#pragma once

#include <string>

#include "slicematch/measure.hpp"

namespace slicematch {

/// Shortest decimal string that round-trips the double exactly.
std::string fmt_double(double v);

/// CSV with header x0,...,x{n-1} or x0,...,x{n-1},w. A missing weight
/// column means uniform weights.
DiscreteMeasure read_measure_csv(const std::string& path);
void write_measure_csv(const std::string& path, const DiscreteMeasure& sigma);
std::string measure_to_csv(const DiscreteMeasure& sigma);

/// Headerless CSV of doubles, one matrix row per line.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
std::string matrix_to_csv(const Eigen::MatrixXd& m);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

/// 8-bit grayscale images. PGM covers both P2 and P5; PNG inputs are
/// converted to 8-bit grayscale on load.
IntensityGrid read_pgm(const std::string& path);
void write_pgm(const std::string& path, const IntensityGrid& grid);  // binary P5
IntensityGrid read_png_gray(const std::string& path);
void write_png_gray(const std::string& path, const IntensityGrid& grid);

bool is_image_path(const std::string& path);
IntensityGrid read_image(const std::string& path);
void write_image(const std::string& path, const IntensityGrid& grid);

/// CSV loads directly; PGM/PNG load through from_image.
DiscreteMeasure read_measure_any(const std::string& path);

}  // namespace slicematch
