#include "mikado/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mikado/errors.hpp"

namespace mikado {

ArrayGeometry build_geometry(std::size_t n_rows, std::size_t n_cols, double spacing_px,
                             double margin_px) {
    if (n_rows == 0 || n_cols == 0)
        throw ParameterError("build_geometry: lattice dimensions must be positive");
    if (!(spacing_px > 0.0) || !std::isfinite(spacing_px))
        throw ParameterError("build_geometry: spacing_px must be positive");
    if (!(margin_px > 0.0) || !std::isfinite(margin_px))
        throw ParameterError("build_geometry: margin_px must be positive");

    ArrayGeometry g;
    g.n_rows = n_rows;
    g.n_cols = n_cols;
    g.spacing_px = spacing_px;
    g.margin_px = margin_px;
    auto extent = [&](std::size_t n) {
        // round-off in (n - 1) * spacing must not add a pixel
        const double span = static_cast<double>(n - 1) * spacing_px + 2.0 * margin_px;
        return static_cast<std::size_t>(std::ceil(span - 1e-9)) + 1;
    };
    g.image_height = extent(n_rows);
    g.image_width = extent(n_cols);
    g.site_centers.reserve(n_rows * n_cols);
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c)
            g.site_centers.push_back({margin_px + static_cast<double>(r) * spacing_px,
                                      margin_px + static_cast<double>(c) * spacing_px});
    return g;
}

PSFModel PSFModel::gaussian(double hwhm_px, double truncation_factor) {
    PSFModel psf{hwhm_px, truncation_factor * hwhm_px};
    psf.validate();
    return psf;
}

void PSFModel::validate() const {
    if (!(hwhm_px > 0.0) || !std::isfinite(hwhm_px))
        throw ParameterError("PSFModel: hwhm_px must be positive");
    if (!(truncation_radius_px >= 3.0 * hwhm_px) || !std::isfinite(truncation_radius_px))
        throw ParameterError("PSFModel: truncation_radius_px must be at least 3 * hwhm_px");
}

double psf_weight(const PSFModel& psf, double dx, double dy) {
    const double r2 = dx * dx + dy * dy;
    if (r2 > psf.truncation_radius_px * psf.truncation_radius_px) return 0.0;
    return std::exp(-std::numbers::ln2 * r2 / (psf.hwhm_px * psf.hwhm_px));
}

MeasurementMatrix::MeasurementMatrix(std::size_t image_height, std::size_t image_width,
                                     std::vector<std::size_t> col_ptr,
                                     std::vector<std::size_t> row_idx,
                                     std::vector<double> values)
    : image_height_(image_height),
      image_width_(image_width),
      col_ptr_(std::move(col_ptr)),
      csc_row_(std::move(row_idx)),
      csc_val_(std::move(values)) {
    if (col_ptr_.empty() || col_ptr_.front() != 0 || col_ptr_.back() != csc_row_.size() ||
        csc_row_.size() != csc_val_.size())
        throw ContractError("MeasurementMatrix: inconsistent column-compressed arrays");
    const std::size_t np = n_pixels();
    const std::size_t ns = n_sites();

    row_ptr_.assign(np + 1, 0);
    for (std::size_t j = 0; j < ns; ++j) {
        for (std::size_t q = col_ptr_[j]; q < col_ptr_[j + 1]; ++q) {
            if (csc_row_[q] >= np) throw ContractError("MeasurementMatrix: pixel index out of range");
            if (q > col_ptr_[j] && csc_row_[q] <= csc_row_[q - 1])
                throw ContractError("MeasurementMatrix: unsorted column");
            ++row_ptr_[csc_row_[q] + 1];
        }
    }
    for (std::size_t p = 0; p < np; ++p) row_ptr_[p + 1] += row_ptr_[p];
    csr_col_.resize(csc_row_.size());
    csr_val_.resize(csc_val_.size());
    csc_to_csr_.resize(csc_val_.size());
    std::vector<std::size_t> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
    for (std::size_t j = 0; j < ns; ++j) {
        for (std::size_t q = col_ptr_[j]; q < col_ptr_[j + 1]; ++q) {
            const std::size_t dst = cursor[csc_row_[q]]++;
            csr_col_[dst] = j;
            csr_val_[dst] = csc_val_[q];
            csc_to_csr_[q] = dst;
        }
    }
}

std::vector<double> MeasurementMatrix::multiply(std::span<const double> x) const {
    if (x.size() != n_sites()) throw ContractError("MeasurementMatrix::multiply: size mismatch");
    std::vector<double> y(n_pixels(), 0.0);
    for (std::size_t p = 0; p < y.size(); ++p) {
        double acc = 0.0;
        for (std::size_t q = row_ptr_[p]; q < row_ptr_[p + 1]; ++q) acc += csr_val_[q] * x[csr_col_[q]];
        y[p] = acc;
    }
    return y;
}

std::vector<double> MeasurementMatrix::multiply_transpose(std::span<const double> y) const {
    if (y.size() != n_pixels())
        throw ContractError("MeasurementMatrix::multiply_transpose: size mismatch");
    std::vector<double> x(n_sites(), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        double acc = 0.0;
        for (std::size_t q = col_ptr_[j]; q < col_ptr_[j + 1]; ++q) acc += csc_val_[q] * y[csc_row_[q]];
        x[j] = acc;
    }
    return x;
}

MeasurementMatrix MeasurementMatrix::select_columns(std::span<const std::size_t> sites) const {
    std::vector<std::size_t> ptr{0};
    std::vector<std::size_t> rows;
    std::vector<double> vals;
    ptr.reserve(sites.size() + 1);
    for (std::size_t j : sites) {
        if (j >= n_sites()) throw ContractError("select_columns: site index out of range");
        rows.insert(rows.end(), csc_row_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j]),
                    csc_row_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j + 1]));
        vals.insert(vals.end(), csc_val_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j]),
                    csc_val_.begin() + static_cast<std::ptrdiff_t>(col_ptr_[j + 1]));
        ptr.push_back(rows.size());
    }
    return MeasurementMatrix(image_height_, image_width_, std::move(ptr), std::move(rows),
                             std::move(vals));
}

std::vector<double> MeasurementMatrix::to_dense() const {
    const std::size_t ns = n_sites();
    std::vector<double> dense(n_pixels() * ns, 0.0);
    for (std::size_t j = 0; j < ns; ++j)
        for (std::size_t q = col_ptr_[j]; q < col_ptr_[j + 1]; ++q) dense[csc_row_[q] * ns + j] = csc_val_[q];
    return dense;
}

MeasurementMatrix build_measurement_matrix(const ArrayGeometry& geom, const PSFModel& psf) {
    psf.validate();
    if (geom.site_centers.empty() || geom.image_height == 0 || geom.image_width == 0)
        throw ParameterError("build_measurement_matrix: empty geometry");
    const double radius = psf.truncation_radius_px;
    const double max_row = static_cast<double>(geom.image_height - 1);
    const double max_col = static_cast<double>(geom.image_width - 1);

    std::vector<std::size_t> col_ptr{0};
    std::vector<std::size_t> rows;
    std::vector<double> vals;
    col_ptr.reserve(geom.n_sites() + 1);
    for (std::size_t j = 0; j < geom.n_sites(); ++j) {
        const SiteCenter& c = geom.site_centers[j];
        if (c.row - radius < 0.0 || c.col - radius < 0.0 || c.row + radius > max_row ||
            c.col + radius > max_col) {
            std::ostringstream msg;
            msg << "build_measurement_matrix: PSF truncation disk of site " << j
                << " leaves the image frame (increase margin)";
            throw GeometryError(msg.str());
        }
        const auto r0 = static_cast<std::size_t>(std::ceil(c.row - radius));
        const auto r1 = static_cast<std::size_t>(std::floor(c.row + radius));
        const auto c0 = static_cast<std::size_t>(std::ceil(c.col - radius));
        const auto c1 = static_cast<std::size_t>(std::floor(c.col + radius));
        const std::size_t begin = rows.size();
        double total = 0.0;
        for (std::size_t r = r0; r <= r1; ++r) {
            for (std::size_t cc = c0; cc <= c1; ++cc) {
                const double w = psf_weight(psf, static_cast<double>(r) - c.row,
                                            static_cast<double>(cc) - c.col);
                if (w <= 0.0) continue;
                rows.push_back(r * geom.image_width + cc);
                vals.push_back(w);
                total += w;
            }
        }
        for (std::size_t q = begin; q < vals.size(); ++q) vals[q] /= total;
        col_ptr.push_back(rows.size());
    }
    return MeasurementMatrix(geom.image_height, geom.image_width, std::move(col_ptr),
                             std::move(rows), std::move(vals));
}

double diffraction_ratio(double wavelength, double numerical_aperture, double spacing) {
    if (!(wavelength > 0.0) || !(numerical_aperture > 0.0) || !(spacing > 0.0))
        throw ParameterError("diffraction_ratio: inputs must be positive");
    if (numerical_aperture > 1.0) throw ParameterError("diffraction_ratio: numerical aperture exceeds 1");
    return spacing / (kDiffractionWidthFactor * wavelength / numerical_aperture);
}

}  // namespace mikado
