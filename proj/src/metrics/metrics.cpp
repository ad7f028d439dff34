#include "sfwi/metrics/metrics.hpp"

#include <fftw3.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <mutex>

namespace sfwi {
namespace {

void same_grid(const VelocityModel& a, const VelocityModel& b, const char* op) {
  if (!(a.grid() == b.grid())) throw InvalidArgument(std::string(op) + ": fields are on different grids");
}

}  // namespace

double rel_l2(const VelocityModel& m, const VelocityModel& m_true) {
  same_grid(m, m_true, "rel_l2");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    num += (m[i] - m_true[i]) * (m[i] - m_true[i]);
    den += m_true[i] * m_true[i];
  }
  if (den == 0.0) throw InvalidArgument("rel_l2: reference model has zero norm");
  return std::sqrt(num) / std::sqrt(den);
}

void SsimConfig::validate() const {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("SSIM window size must be odd");
  if (!(sigma > 0.0)) throw InvalidArgument("SSIM sigma must be positive");
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw InvalidArgument("SSIM K1 and K2 must be positive");
  if (!(range > 0.0)) throw InvalidArgument("SSIM dynamic range must be positive");
}

double ssim(const VelocityModel& m, const VelocityModel& m_true, const SsimConfig& cfg) {
  cfg.validate();
  same_grid(m, m_true, "ssim");
  const int nx = m.grid().nx(), nz = m.grid().nz(), w = cfg.window, r = w / 2;
  if (nx < w || nz < w)
    throw InvalidArgument("ssim: field smaller than the " + std::to_string(w) + "-cell window");

  const auto [a_lo, a_hi] = std::minmax_element(m.values().begin(), m.values().end());
  const auto [b_lo, b_hi] = std::minmax_element(m_true.values().begin(), m_true.values().end());
  const double lo = std::min(*a_lo, *b_lo), hi = std::max(*a_hi, *b_hi);
  if (hi == lo) {
    if (m == m_true) return 1.0;
    throw InvalidArgument("ssim: degenerate value range");
  }
  std::vector<double> a(m.size()), b(m.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = (m[i] - lo) / (hi - lo);
    b[i] = (m_true[i] - lo) / (hi - lo);
  }

  std::vector<double> g(w);
  double gs = 0.0;
  for (int i = 0; i < w; ++i) gs += g[i] = std::exp(-0.5 * (i - r) * (i - r) / (cfg.sigma * cfg.sigma));
  for (double& v : g) v /= gs;

  // Separable valid-mode filtering of a, b, a^2, b^2, ab.
  const int ox = nx - w + 1, oz = nz - w + 1;
  auto filter = [&](auto&& f) {
    std::vector<double> rows(static_cast<std::size_t>(nz) * ox), out(static_cast<std::size_t>(oz) * ox);
    for (int z = 0; z < nz; ++z)
      for (int x = 0; x < ox; ++x) {
        double s = 0.0;
        for (int k = 0; k < w; ++k) s += g[k] * f(static_cast<std::size_t>(z) * nx + x + k);
        rows[z * ox + x] = s;
      }
    for (int z = 0; z < oz; ++z)
      for (int x = 0; x < ox; ++x) {
        double s = 0.0;
        for (int k = 0; k < w; ++k) s += g[k] * rows[(z + k) * ox + x];
        out[z * ox + x] = s;
      }
    return out;
  };
  const auto ma = filter([&](std::size_t i) { return a[i]; });
  const auto mb = filter([&](std::size_t i) { return b[i]; });
  const auto saa = filter([&](std::size_t i) { return a[i] * a[i]; });
  const auto sbb = filter([&](std::size_t i) { return b[i] * b[i]; });
  const auto sab = filter([&](std::size_t i) { return a[i] * b[i]; });

  const double c1 = (cfg.k1 * cfg.range) * (cfg.k1 * cfg.range);
  const double c2 = (cfg.k2 * cfg.range) * (cfg.k2 * cfg.range);
  double total = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double va = saa[i] - ma[i] * ma[i];
    const double vb = sbb[i] - mb[i] * mb[i];
    const double cov = sab[i] - ma[i] * mb[i];
    total += ((2 * ma[i] * mb[i] + c1) * (2 * cov + c2)) /
             ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(ma.size());
}

std::vector<double> singular_values(const VelocityModel& m) {
  const int nx = m.grid().nx(), nz = m.grid().nz();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
      m.values().data(), nz, nx);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

int effective_rank(const VelocityModel& m, double eta) {
  if (!all_finite(m.values())) throw NumericError("effective_rank: non-finite model values");
  const auto s = singular_values(m);
  if (s.empty() || s.front() == 0.0) return 0;
  const double tol = s.front() * std::max(m.grid().nx(), m.grid().nz()) * eta;
  return static_cast<int>(std::count_if(s.begin(), s.end(), [&](double v) { return v > tol; }));
}

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> power_spectrum(const VelocityModel& m) {
  const int nx = m.grid().nx(), nz = m.grid().nz();
  const std::size_t n = m.size();
  fftw_complex* buf = fftw_alloc_complex(n);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_mutex());
    plan = fftw_plan_dft_2d(nz, nx, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = m[i];
    buf[i][1] = 0.0;
  }
  fftw_execute(plan);
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
  {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return p;
}

// Radial mean of the 2D power per bin; bin 0 (DC) is dropped.
std::vector<double> radial_average(const std::vector<double>& p, const Grid2D& g, double width,
                                   int nbins) {
  std::vector<double> sum(nbins + 1, 0.0);
  std::vector<int> cnt(nbins + 1, 0);
  for (int z = 0; z < g.nz(); ++z) {
    const int iz = z <= g.nz() / 2 ? z : z - g.nz();
    const double kz = iz / (g.nz() * g.dz());
    for (int x = 0; x < g.nx(); ++x) {
      const int ix = x <= g.nx() / 2 ? x : x - g.nx();
      const double kx = ix / (g.nx() * g.dx());
      const int b = static_cast<int>(std::lround(std::hypot(kx, kz) / width));
      if (b > nbins) continue;
      sum[b] += p[g.index(z, x)];
      ++cnt[b];
    }
  }
  std::vector<double> out;
  for (int b = 1; b <= nbins; ++b) out.push_back(cnt[b] ? sum[b] / cnt[b] : 0.0);
  return out;
}

std::vector<double> grad_magnitude(const VelocityModel& m) {
  const Grid2D& g = m.grid();
  std::vector<double> out(m.size());
  for (int z = 0; z < g.nz(); ++z)
    for (int x = 0; x < g.nx(); ++x) {
      const std::size_t i = g.index(z, x);
      const double gx = x + 1 < g.nx() ? (m[i + 1] - m[i]) / g.dx() : 0.0;
      const double gz = z + 1 < g.nz() ? (m[i + g.nx()] - m[i]) / g.dz() : 0.0;
      out[i] = std::sqrt(gx * gx + gz * gz);
    }
  return out;
}

// Linear-interpolated percentile.
double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - i) * (v[i + 1] - v[i]);
}

double ratio(double num, double den, const char* what) {
  if (!(den > 0.0)) throw InvalidArgument(std::string("deblur_report: ") + what + " of the corrupt field is zero");
  return num / den;
}

}  // namespace

SpectralReport deblur_report(const VelocityModel& corrupt, const VelocityModel& corrected,
                             const DeblurBands& bands) {
  same_grid(corrupt, corrected, "deblur_report");
  const Grid2D& g = corrupt.grid();
  const double nyquist = 0.5 / std::max(g.dx(), g.dz());
  if (!(bands.band_lo > 0.0 && bands.band_lo < bands.band_hi))
    throw InvalidArgument("deblur_report: band must satisfy 0 < lo < hi");
  if (bands.band_hi > nyquist || bands.k_cut >= nyquist)
    throw InvalidArgument("deblur_report: band up to " + std::to_string(bands.band_hi) +
                          " cycles/m exceeds the Nyquist limit " + std::to_string(nyquist) +
                          " cycles/m of this grid");

  const int n = std::max(g.nx(), g.nz());
  const double width = 1.0 / (n * g.dx());
  const double kmax = std::hypot(0.5 / g.dx(), 0.5 / g.dz());
  const int nbins = static_cast<int>(std::lround(kmax / width));

  SpectralReport r;
  r.s_corrupt = radial_average(power_spectrum(corrupt), g, width, nbins);
  r.s_corrected = radial_average(power_spectrum(corrected), g, width, nbins);
  for (int b = 1; b <= nbins; ++b) r.k.push_back(b * width);

  double band_a = 0, band_b = 0, hf_a = 0, hf_b = 0, tot_a = 0, tot_b = 0;
  for (std::size_t i = 0; i < r.k.size(); ++i) {
    tot_a += r.s_corrupt[i];
    tot_b += r.s_corrected[i];
    if (r.k[i] >= bands.band_lo && r.k[i] <= bands.band_hi) {
      band_a += r.s_corrupt[i];
      band_b += r.s_corrected[i];
    }
    if (r.k[i] > bands.k_cut) {
      hf_a += r.s_corrupt[i];
      hf_b += r.s_corrected[i];
    }
  }
  r.r_band = ratio(band_b, band_a, "band power");
  r.hf_gain = ratio(ratio(hf_b, tot_b, "total power"), ratio(hf_a, tot_a, "total power"),
                    "high-wavenumber fraction");

  const auto ga = grad_magnitude(corrupt);
  const auto gb = grad_magnitude(corrected);
  double ea = 0, eb = 0;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    ea += ga[i] * ga[i];
    eb += gb[i] * gb[i];
  }
  r.grad_energy_gain = ratio(eb, ea, "gradient energy");
  r.p90_grad_gain = ratio(percentile(gb, 0.9), percentile(ga, 0.9), "p90 gradient magnitude");
  return r;
}

void write_spectral_csv(const std::filesystem::path& path, const SpectralReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(10);
  out << "k,S_corrupt,S_corrected\n";
  for (std::size_t i = 0; i < r.k.size(); ++i)
    out << r.k[i] << ',' << r.s_corrupt[i] << ',' << r.s_corrected[i] << '\n';
  out << "\nR_band,hf_gain,grad_energy_gain,p90_grad_gain\n"
      << r.r_band << ',' << r.hf_gain << ',' << r.grad_energy_gain << ',' << r.p90_grad_gain
      << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sfwi
