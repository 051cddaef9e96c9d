#include "vtag/synth.hpp"

#include <cmath>

namespace vtag {

namespace {

// Dense lower Cholesky factor; fails when the matrix is not positive definite.
std::vector<double> cholesky(const std::vector<double>& a, int64_t n) {
  std::vector<double> l(a.size(), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (int64_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        check(s > 1e-12, "correlation matrix is not positive definite");
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return l;
}

void validate_correlation(const std::vector<double>& c, int64_t n) {
  check(static_cast<int64_t>(c.size()) == n * n,
        "correlation matrix must be ", n, "x", n, ", got ", c.size(),
        " entries");
  for (int64_t i = 0; i < n; ++i) {
    check(std::fabs(c[i * n + i] - 1.0) < 1e-12,
          "correlation diagonal entry ", i, " must be 1");
    for (int64_t j = 0; j < n; ++j) {
      check(c[i * n + j] >= -1.0 && c[i * n + j] <= 1.0,
            "correlation entry (", i, ", ", j, ") outside [-1, 1]");
      check(std::fabs(c[i * n + j] - c[j * n + i]) < 1e-12,
            "correlation matrix is not symmetric at (", i, ", ", j, ")");
    }
  }
}

}  // namespace

double inverse_normal_cdf(double p) {
  check(p > 0.0 && p < 1.0, "inverse_normal_cdf: p must be in (0, 1), got ", p);
  // Acklam's approximation, |relative error| < 1.15e-9 over (0, 1).
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

std::vector<double> pairwise_correlation(int64_t num_labels, double r) {
  std::vector<double> c(num_labels * num_labels, 0.0);
  for (int64_t i = 0; i < num_labels; ++i) c[i * num_labels + i] = 1.0;
  for (int64_t i = 0; i + 1 < num_labels; i += 2) {
    c[i * num_labels + i + 1] = r;
    c[(i + 1) * num_labels + i] = r;
  }
  return c;
}

SynthDataset synth_generate(const SynthSpec& spec) {
  check(spec.num_examples > 0, "synth: num_examples must be positive");
  check(spec.num_labels > 0, "synth: num_labels must be positive");
  check(spec.rgb_dim > 0 && spec.audio_dim > 0, "synth: feature dims must be positive");
  check(spec.max_frames > 0, "synth: max_frames must be positive");
  check(spec.mean_labels_per_example > 0 &&
            spec.mean_labels_per_example < static_cast<double>(spec.num_labels),
        "synth: mean_labels_per_example must be in (0, L)");
  check(spec.window_min_frames >= 1 &&
            spec.window_min_frames <= spec.window_max_frames,
        "synth: bad evidence window range [", spec.window_min_frames, ", ",
        spec.window_max_frames, "]");

  const int64_t L = spec.num_labels;
  std::vector<double> corr = spec.correlation;
  if (corr.empty()) {
    corr.assign(L * L, 0.0);
    for (int64_t i = 0; i < L; ++i) corr[i * L + i] = 1.0;
  }
  validate_correlation(corr, L);
  std::vector<double> chol = cholesky(corr, L);

  Rng proto_rng = Rng(spec.seed).fork(0xf00d);
  auto make_protos = [&](const std::vector<double>& given, int64_t dim,
                         const char* what) {
    if (!given.empty()) {
      check(static_cast<int64_t>(given.size()) == L * dim, "synth: ", what,
            " prototypes must be L x ", dim, ", got ", given.size(),
            " entries");
      return given;
    }
    std::vector<double> protos(static_cast<size_t>(L * dim));
    for (double& v : protos) v = proto_rng.normal() * spec.prototype_scale;
    return protos;
  };
  std::vector<double> rgb_protos = make_protos(spec.rgb_prototypes, spec.rgb_dim, "rgb");
  std::vector<double> audio_protos =
      make_protos(spec.audio_prototypes, spec.audio_dim, "audio");

  double marginal = spec.mean_labels_per_example / static_cast<double>(L);
  double threshold = inverse_normal_cdf(1.0 - marginal);

  Rng rng = Rng(spec.seed).fork(0xda7a);
  SynthDataset out;
  out.spec = spec;
  out.examples.reserve(spec.num_examples);

  std::vector<double> gauss(L), z(L);
  const int64_t frames = spec.max_frames;
  for (int64_t n = 0; n < spec.num_examples; ++n) {
    Example ex;
    {
      char buf[32];
      std::snprintf(buf, sizeof buf, "v%07lld", static_cast<long long>(n));
      ex.video_id = buf;
    }
    for (double& g : gauss) g = rng.normal();
    for (int64_t i = 0; i < L; ++i) {
      double acc = 0.0;
      for (int64_t k = 0; k <= i; ++k) acc += chol[i * L + k] * gauss[k];
      z[i] = acc;
    }
    for (int64_t i = 0; i < L; ++i)
      if (z[i] > threshold) ex.labels.push_back(i);

    FrameLevel fl;
    fl.frames = frames;
    fl.rgb_dim = spec.rgb_dim;
    fl.audio_dim = spec.audio_dim;
    fl.rgb.resize(static_cast<size_t>(frames * spec.rgb_dim));
    fl.audio.resize(static_cast<size_t>(frames * spec.audio_dim));
    for (double& v : fl.rgb) v = spec.noise_level * rng.normal();
    for (double& v : fl.audio) v = spec.noise_level * rng.normal();

    for (int64_t label : ex.labels) {
      int64_t wmin = std::min(spec.window_min_frames, frames);
      int64_t wmax = std::min(spec.window_max_frames, frames);
      int64_t w = wmin + rng.uniform_index(wmax - wmin + 1);
      int64_t start = rng.uniform_index(frames - w + 1);
      for (int64_t t = start; t < start + w; ++t) {
        for (int64_t j = 0; j < spec.rgb_dim; ++j)
          fl.rgb[t * spec.rgb_dim + j] += rgb_protos[label * spec.rgb_dim + j];
        for (int64_t j = 0; j < spec.audio_dim; ++j)
          fl.audio[t * spec.audio_dim + j] +=
              audio_protos[label * spec.audio_dim + j];
      }
    }

    VideoLevel vl;
    vl.mean_rgb.assign(spec.rgb_dim, 0.0);
    vl.mean_audio.assign(spec.audio_dim, 0.0);
    for (int64_t t = 0; t < frames; ++t) {
      for (int64_t j = 0; j < spec.rgb_dim; ++j)
        vl.mean_rgb[j] += fl.rgb[t * spec.rgb_dim + j];
      for (int64_t j = 0; j < spec.audio_dim; ++j)
        vl.mean_audio[j] += fl.audio[t * spec.audio_dim + j];
    }
    for (double& v : vl.mean_rgb) v /= static_cast<double>(frames);
    for (double& v : vl.mean_audio) v /= static_cast<double>(frames);

    ex.frame_level = std::move(fl);
    ex.video_level = std::move(vl);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

}  // namespace vtag
