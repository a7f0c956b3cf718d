#pragma once

// File formats: the self-describing binary image, a CSV image fallback, and
// the truth / occupancy / trace tables.

#include <string>
#include <vector>

#include "mikado/geometry.hpp"
#include "mikado/simulator.hpp"
#include "mikado/strategy.hpp"

namespace mikado {

enum class ImageFormat { binary, csv };

/// Binary layout: the header line
/// {"height":H,"width":W,"dtype":"f64","endian":"little","version":1}\n
/// then H*W little-endian doubles, row-major.
void save_image(const std::string& path, const Image& image, ImageFormat format = ImageFormat::binary);

/// Detects the format from the first byte ('{' means binary). Throws IoError on
/// a malformed header, a truncated or oversized payload, or a version mismatch.
Image load_image(const std::string& path);

/// site_index,occupied,brightness
void save_truth_csv(const std::string& path, const SceneTruth& truth);
SceneTruth load_truth_csv(const std::string& path);

/// site_index,row,col,occupied,xhat; row/col are lattice coordinates.
void save_occupancy_csv(const std::string& path, const ArrayGeometry& geom, const Occupancy& occupied,
                        const std::vector<double>& xhat);
/// Reads the `occupied` column back.
Occupancy load_occupancy_csv(const std::string& path);

/// step,t_low,t_high,site_index,label,xhat for every site active at each step.
void save_trace_csv(const std::string& path, const std::vector<MikadoState>& trace);

}  // namespace mikado
