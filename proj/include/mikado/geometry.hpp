#pragma once

// Array geometry, Gaussian PSF and the sparse measurement matrix of the
// forward model y = M x + k + n.

#include <cstddef>
#include <span>
#include <vector>

namespace mikado {

/// Sub-pixel position of a site; pixel (r, c) has its center at (r, c).
struct SiteCenter {
    double row = 0.0;
    double col = 0.0;
    bool operator==(const SiteCenter&) const = default;
};

/// Rectangular lattice of sites and the image frame that contains it.
struct ArrayGeometry {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    double spacing_px = 0.0;
    double margin_px = 0.0;
    std::size_t image_height = 0;
    std::size_t image_width = 0;
    std::vector<SiteCenter> site_centers;  // row-major over the lattice

    std::size_t n_sites() const { return site_centers.size(); }
    std::size_t n_pixels() const { return image_height * image_width; }
    std::size_t site_index(std::size_t lattice_row, std::size_t lattice_col) const {
        return lattice_row * n_cols + lattice_col;
    }
};

/// Square lattice with `spacing_px` between neighbours and `margin_px` between
/// the outermost centers and the border pixels. Image extent per axis is
/// ceil((n - 1) * spacing + 2 * margin) + 1 pixels.
ArrayGeometry build_geometry(std::size_t n_rows, std::size_t n_cols, double spacing_px,
                             double margin_px);

struct PSFModel {
    double hwhm_px = 2.0;
    double truncation_radius_px = 8.0;

    /// Gaussian PSF truncated at `truncation_factor * hwhm_px`.
    static PSFModel gaussian(double hwhm_px, double truncation_factor = 4.0);
    void validate() const;
};

/// Unnormalized PSF sample exp(-ln2 (dx^2 + dy^2) / hwhm^2); zero outside the
/// truncation disk.
double psf_weight(const PSFModel& psf, double dx, double dy);

/// Sparse pixels x sites matrix with unit-sum nonnegative columns.
///
/// Stored row-compressed (pixel rows); a column-compressed copy is kept so that
/// per-site traversal is as cheap as per-pixel traversal.
class MeasurementMatrix {
public:
    MeasurementMatrix() = default;

    /// Builds from column-compressed data; row indices within a column must be
    /// strictly increasing.
    MeasurementMatrix(std::size_t image_height, std::size_t image_width,
                      std::vector<std::size_t> col_ptr, std::vector<std::size_t> row_idx,
                      std::vector<double> values);

    std::size_t n_pixels() const { return image_height_ * image_width_; }
    std::size_t n_sites() const { return col_ptr_.empty() ? 0 : col_ptr_.size() - 1; }
    std::size_t image_height() const { return image_height_; }
    std::size_t image_width() const { return image_width_; }
    std::size_t nnz() const { return csc_val_.size(); }

    // Row-compressed view (pixel -> sites).
    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> row_sites() const { return csr_col_; }
    std::span<const double> row_values() const { return csr_val_; }

    // Column-compressed view (site -> pixels).
    std::span<const std::size_t> col_ptr() const { return col_ptr_; }
    std::span<const std::size_t> col_pixels() const { return csc_row_; }
    std::span<const double> col_values() const { return csc_val_; }
    /// For column-compressed entry q, its position in the row-compressed arrays.
    std::span<const std::size_t> col_to_row_position() const { return csc_to_csr_; }

    /// M x
    std::vector<double> multiply(std::span<const double> x) const;
    /// M^T y
    std::vector<double> multiply_transpose(std::span<const double> y) const;

    /// Matrix restricted to the given sites (columns), in the given order.
    MeasurementMatrix select_columns(std::span<const std::size_t> sites) const;

    /// Row-major dense copy (n_pixels x n_sites); for small test instances.
    std::vector<double> to_dense() const;

private:
    std::size_t image_height_ = 0;
    std::size_t image_width_ = 0;
    std::vector<std::size_t> col_ptr_;
    std::vector<std::size_t> csc_row_;
    std::vector<double> csc_val_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> csr_col_;
    std::vector<double> csr_val_;
    std::vector<std::size_t> csc_to_csr_;
};

/// Column j is the PSF sampled at pixel centers around site j, L1-normalized.
/// Throws GeometryError if a truncation disk leaves the image frame.
MeasurementMatrix build_measurement_matrix(const ArrayGeometry& geom, const PSFModel& psf);

/// Airy-width factor for a diffraction-limited PSF width, 0.514 * lambda / NA.
inline constexpr double kDiffractionWidthFactor = 0.514;

/// Lattice spacing in units of the diffraction-limited PSF width.
double diffraction_ratio(double wavelength, double numerical_aperture, double spacing);

}  // namespace mikado
