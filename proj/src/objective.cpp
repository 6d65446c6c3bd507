#include "meir/objective.hpp"

#include <cmath>

#include "meir/errors.hpp"

namespace meir {

double ssd(std::span<const double> r_vals, std::span<const double> t_vals,
           double cell_area) {
  if (r_vals.size() != t_vals.size())
    throw ContractError("ssd: array length mismatch");
  if (cell_area <= 0.0) throw ContractError("ssd: cell_area must be positive");
  double acc = 0.0;
  for (size_t i = 0; i < r_vals.size(); ++i) {
    const double d = t_vals[i] - r_vals[i];
    acc += d * d;
  }
  return 0.5 * cell_area * acc;
}

double ndm(const ScalarImage& r_img, const ScalarImage& t_warped) {
  if (r_img.width() != t_warped.width() ||
      r_img.height() != t_warped.height())
    throw ContractError("ndm: image sizes differ");
  double num = 0.0, den = 0.0;
  const auto& r = r_img.samples();
  const auto& t = t_warped.samples();
  for (size_t i = 0; i < r.size(); ++i) {
    const double d = t[i] - r[i];
    num += d * d;
    den += r[i] * r[i];
  }
  if (den == 0.0)
    throw UndefinedMeasureError("ndm: reference image has zero norm");
  return std::sqrt(num / den);
}

namespace {

// Forward difference along an axis with the last difference row replicated:
// constants map to zero and linear fields are differenced exactly.
void diff_forward(const std::vector<double>& v, int nx, int ny, int axis,
                  double h, std::vector<double>& out) {
  out.resize(v.size());
  const double inv_h = 1.0 / h;
  if (axis == 0) {
    for (int i2 = 0; i2 < ny; ++i2) {
      const int row = i2 * nx;
      for (int i1 = 0; i1 + 1 < nx; ++i1)
        out[row + i1] = (v[row + i1 + 1] - v[row + i1]) * inv_h;
      out[row + nx - 1] = nx >= 2 ? out[row + nx - 2] : 0.0;
    }
  } else {
    for (int i2 = 0; i2 < ny; ++i2) {
      for (int i1 = 0; i1 < nx; ++i1) {
        const int j = i2 * nx + i1;
        if (i2 + 1 < ny)
          out[j] = (v[j + nx] - v[j]) * inv_h;
        else
          out[j] = ny >= 2 ? out[j - nx] : 0.0;
      }
    }
  }
}

// Adjoint of diff_forward (true transpose, including the replicated row).
void diff_transpose(const std::vector<double>& w, int nx, int ny, int axis,
                    double h, std::vector<double>& out) {
  out.assign(w.size(), 0.0);
  const double inv_h = 1.0 / h;
  if (axis == 0) {
    for (int i2 = 0; i2 < ny; ++i2) {
      const int row = i2 * nx;
      for (int i1 = 0; i1 + 1 < nx; ++i1) {
        out[row + i1] -= w[row + i1] * inv_h;
        out[row + i1 + 1] += w[row + i1] * inv_h;
      }
      if (nx >= 2) {
        out[row + nx - 2] -= w[row + nx - 1] * inv_h;
        out[row + nx - 1] += w[row + nx - 1] * inv_h;
      }
    }
  } else {
    for (int i2 = 0; i2 + 1 < ny; ++i2) {
      for (int i1 = 0; i1 < nx; ++i1) {
        const int j = i2 * nx + i1;
        out[j] -= w[j] * inv_h;
        out[j + nx] += w[j] * inv_h;
      }
    }
    if (ny >= 2) {
      for (int i1 = 0; i1 < nx; ++i1) {
        const int j = (ny - 1) * nx + i1;
        out[j - nx] -= w[j] * inv_h;
        out[j] += w[j] * inv_h;
      }
    }
  }
}

void check_elastic_config(const ElasticConfig& cfg) {
  if (cfg.mu < 0.0 || cfg.lambda + cfg.mu < 0.0)
    throw ContractError("elastic energy: need mu >= 0 and lambda + mu >= 0");
}

}  // namespace

double elastic_energy(const DisplacementField& u, const ElasticConfig& cfg) {
  check_elastic_config(cfg);
  const Grid& g = u.grid;
  std::vector<double> d1u1, d2u1, d1u2, d2u2;
  diff_forward(u.u1, g.nx, g.ny, 0, g.h1, d1u1);
  diff_forward(u.u1, g.nx, g.ny, 1, g.h2, d2u1);
  diff_forward(u.u2, g.nx, g.ny, 0, g.h1, d1u2);
  diff_forward(u.u2, g.nx, g.ny, 1, g.h2, d2u2);
  const double lam_mu = cfg.lambda + cfg.mu;
  double acc = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    const double div = d1u1[j] + d2u2[j];
    acc += 0.5 * lam_mu * div * div +
           0.5 * cfg.mu *
               (d1u1[j] * d1u1[j] + d2u1[j] * d2u1[j] + d1u2[j] * d1u2[j] +
                d2u2[j] * d2u2[j]);
  }
  return g.cell_area() * acc;
}

DisplacementField elastic_operator_apply(const DisplacementField& u,
                                         const ElasticConfig& cfg) {
  check_elastic_config(cfg);
  const Grid& g = u.grid;
  std::vector<double> d1u1, d2u1, d1u2, d2u2;
  diff_forward(u.u1, g.nx, g.ny, 0, g.h1, d1u1);
  diff_forward(u.u1, g.nx, g.ny, 1, g.h2, d2u1);
  diff_forward(u.u2, g.nx, g.ny, 0, g.h1, d1u2);
  diff_forward(u.u2, g.nx, g.ny, 1, g.h2, d2u2);

  std::vector<double> div(g.size());
  for (int j = 0; j < g.size(); ++j) div[j] = d1u1[j] + d2u2[j];

  const double lam_mu = cfg.lambda + cfg.mu;
  const double area = g.cell_area();
  DisplacementField out = DisplacementField::zero(g);
  std::vector<double> tmp;

  diff_transpose(div, g.nx, g.ny, 0, g.h1, tmp);
  for (int j = 0; j < g.size(); ++j) out.u1[j] += lam_mu * tmp[j];
  diff_transpose(d1u1, g.nx, g.ny, 0, g.h1, tmp);
  for (int j = 0; j < g.size(); ++j) out.u1[j] += cfg.mu * tmp[j];
  diff_transpose(d2u1, g.nx, g.ny, 1, g.h2, tmp);
  for (int j = 0; j < g.size(); ++j) out.u1[j] += cfg.mu * tmp[j];

  diff_transpose(div, g.nx, g.ny, 1, g.h2, tmp);
  for (int j = 0; j < g.size(); ++j) out.u2[j] += lam_mu * tmp[j];
  diff_transpose(d1u2, g.nx, g.ny, 0, g.h1, tmp);
  for (int j = 0; j < g.size(); ++j) out.u2[j] += cfg.mu * tmp[j];
  diff_transpose(d2u2, g.nx, g.ny, 1, g.h2, tmp);
  for (int j = 0; j < g.size(); ++j) out.u2[j] += cfg.mu * tmp[j];

  for (int j = 0; j < g.size(); ++j) {
    out.u1[j] *= area;
    out.u2[j] *= area;
  }
  return out;
}

}  // namespace meir
