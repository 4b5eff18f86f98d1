#include "sslv/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace sslv {

const char* to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Rotation: return "rotation";
    case TransformKind::ColorSwitch: return "color_switch";
    case TransformKind::NoiseAddition: return "noise_addition";
    case TransformKind::FrameReplacement: return "frame_replacement";
    case TransformKind::ClipInversion: return "clip_inversion";
    case TransformKind::SplitJoin: return "split_join";
    case TransformKind::Permutation: return "permutation";
  }
  return "unknown";
}

std::optional<TransformKind> transform_kind_from_string(const std::string& name) {
  for (TransformKind k : all_transform_kinds())
    if (name == to_string(k)) return k;
  // Friendly aliases used by the CLI.
  if (name == "inversion") return TransformKind::ClipInversion;
  if (name == "noise") return TransformKind::NoiseAddition;
  if (name == "color") return TransformKind::ColorSwitch;
  return std::nullopt;
}

std::vector<TransformKind> all_transform_kinds() {
  return {TransformKind::Rotation,       TransformKind::ColorSwitch,
          TransformKind::NoiseAddition,  TransformKind::FrameReplacement,
          TransformKind::ClipInversion,  TransformKind::SplitJoin,
          TransformKind::Permutation};
}

std::vector<int> all_transform_kinds_as_ints() { return {1, 2, 3, 4, 5, 6, 7}; }

std::string TransformSpec::describe() const {
  char buf[256];
  switch (kind) {
    case TransformKind::Rotation:
      std::snprintf(buf, sizeof(buf), R"({"kind":"rotation","degrees":%d})", rotation_degrees);
      return buf;
    case TransformKind::ColorSwitch:
      std::snprintf(buf, sizeof(buf), R"({"kind":"color_switch","perm":[%d,%d,%d]})",
                    channel_perm[0], channel_perm[1], channel_perm[2]);
      return buf;
    case TransformKind::NoiseAddition:
      std::snprintf(buf, sizeof(buf), R"({"kind":"noise_addition","sigma":%.6f})",
                    static_cast<double>(noise_sigma));
      return buf;
    case TransformKind::FrameReplacement:
      std::snprintf(buf, sizeof(buf), R"({"kind":"frame_replacement","frame":%d})",
                    replaced_frame);
      return buf;
    case TransformKind::ClipInversion:
      return R"({"kind":"clip_inversion"})";
    case TransformKind::SplitJoin:
      std::snprintf(buf, sizeof(buf), R"({"kind":"split_join","half":"%s","partner_tag":%llu})",
                    replaced_half == SplitHalf::First ? "first" : "second",
                    static_cast<unsigned long long>(partner_tag));
      return buf;
    case TransformKind::Permutation: {
      std::string s = R"({"kind":"permutation","perm":[)";
      for (size_t i = 0; i < frame_perm.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(frame_perm[i]);
      }
      s += "]}";
      return s;
    }
  }
  return "{}";
}

ClipTensor rotate(const ClipTensor& clip, int degrees) {
  if (degrees != 90 && degrees != 180 && degrees != 270)
    fail(ErrorKind::InvalidParameter, "rotation angle must be 90, 180 or 270");
  const int T = clip.t(), H = clip.h(), W = clip.w(), C = clip.c();
  if ((degrees == 90 || degrees == 270) && H != W)
    fail(ErrorKind::InvalidShape, "90/270 degree rotation requires square frames");
  Tensor out = Tensor::zeros(clip.tensor().shape());
  const real* src = clip.tensor().data();
  real* dst = out.data();
  const size_t row = static_cast<size_t>(W) * C;
  const size_t frame = static_cast<size_t>(H) * row;
  for (int t = 0; t < T; ++t) {
    const real* f = src + static_cast<size_t>(t) * frame;
    real* g = dst + static_cast<size_t>(t) * frame;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        int sy, sx;
        switch (degrees) {
          case 90:  sy = H - 1 - x; sx = y; break;
          case 180: sy = H - 1 - y; sx = W - 1 - x; break;
          default:  sy = x;         sx = W - 1 - y; break;  // 270
        }
        const real* p = f + static_cast<size_t>(sy) * row + static_cast<size_t>(sx) * C;
        real* q = g + static_cast<size_t>(y) * row + static_cast<size_t>(x) * C;
        for (int c = 0; c < C; ++c) q[c] = p[c];
      }
    }
  }
  return ClipTensor(std::move(out));
}

namespace {

void check_channel_perm(const std::array<int, 3>& perm) {
  std::array<bool, 3> seen{};
  for (int p : perm) {
    if (p < 0 || p > 2) fail(ErrorKind::InvalidParameter, "channel permutation entry out of range");
    seen[static_cast<size_t>(p)] = true;
  }
  if (!(seen[0] && seen[1] && seen[2]))
    fail(ErrorKind::InvalidParameter, "channel permutation is not a permutation of (0,1,2)");
  if (perm[0] == 0 && perm[1] == 1 && perm[2] == 2)
    fail(ErrorKind::InvalidParameter, "channel permutation must not be the identity");
}

}  // namespace

ClipTensor color_switch(const ClipTensor& clip, const std::array<int, 3>& perm) {
  check_channel_perm(perm);
  Tensor out = Tensor::zeros(clip.tensor().shape());
  const real* src = clip.tensor().data();
  real* dst = out.data();
  const size_t pixels = clip.tensor().size() / 3;
  for (size_t i = 0; i < pixels; ++i) {
    const real* p = src + i * 3;
    real* q = dst + i * 3;
    q[0] = p[perm[0]];
    q[1] = p[perm[1]];
    q[2] = p[perm[2]];
  }
  return ClipTensor(std::move(out));
}

ClipTensor add_noise(const ClipTensor& clip, real sigma, Rng& rng) {
  if (!(sigma >= real(0.1) && sigma <= real(0.3)))
    fail(ErrorKind::InvalidParameter, "noise sigma must lie in [0.1, 0.3]");
  Tensor out = clip.tensor();
  for (size_t i = 0; i < out.size(); ++i) {
    real v = out[i] + static_cast<real>(rng.next_gaussian(0.0, static_cast<double>(sigma)));
    out[i] = std::clamp(v, real(0), real(1));
  }
  return ClipTensor(std::move(out));
}

ClipTensor replace_frame(const ClipTensor& clip, int t, Rng& rng) {
  if (t < 0 || t >= clip.t())
    fail(ErrorKind::IndexOutOfRange, "frame index " + std::to_string(t) + " outside [0, T)");
  Tensor out = clip.tensor();
  real* f = out.data() + clip.frame_offset(t);
  for (size_t i = 0; i < clip.frame_size(); ++i) f[i] = static_cast<real>(rng.next_unit());
  return ClipTensor(std::move(out));
}

ClipTensor invert_clip(const ClipTensor& clip) {
  const int T = clip.t();
  Tensor out = Tensor::zeros(clip.tensor().shape());
  const real* src = clip.tensor().data();
  real* dst = out.data();
  const size_t frame = clip.frame_size();
  for (int t = 0; t < T; ++t)
    std::copy_n(src + static_cast<size_t>(T - 1 - t) * frame, frame,
                dst + static_cast<size_t>(t) * frame);
  return ClipTensor(std::move(out));
}

ClipTensor split_join(const ClipTensor& clip, const ClipTensor& partner, SplitHalf replaced) {
  if (!clip.tensor().same_shape(partner.tensor()))
    fail(ErrorKind::ShapeMismatch, "split_join requires clip and partner of identical shape");
  const int T = clip.t();
  if (T % 2 != 0) fail(ErrorKind::InvalidShape, "split_join requires an even number of frames");
  Tensor out = clip.tensor();
  const size_t half = clip.frame_size() * static_cast<size_t>(T / 2);
  const size_t begin = replaced == SplitHalf::First ? 0 : half;
  std::copy_n(partner.tensor().data() + begin, half, out.data() + begin);
  return ClipTensor(std::move(out));
}

namespace {

bool is_identity_perm(const std::vector<int>& perm) {
  for (size_t i = 0; i < perm.size(); ++i)
    if (perm[i] != static_cast<int>(i)) return false;
  return true;
}

bool is_reversal_perm(const std::vector<int>& perm) {
  int n = static_cast<int>(perm.size());
  for (int i = 0; i < n; ++i)
    if (perm[static_cast<size_t>(i)] != n - 1 - i) return false;
  return true;
}

void check_frame_perm(const std::vector<int>& perm, int T) {
  if (static_cast<int>(perm.size()) != T)
    fail(ErrorKind::InvalidParameter, "frame permutation length differs from T");
  std::vector<bool> seen(static_cast<size_t>(T), false);
  for (int p : perm) {
    if (p < 0 || p >= T) fail(ErrorKind::InvalidParameter, "frame permutation entry out of range");
    if (seen[static_cast<size_t>(p)])
      fail(ErrorKind::InvalidParameter, "frame permutation repeats an index");
    seen[static_cast<size_t>(p)] = true;
  }
  if (is_identity_perm(perm))
    fail(ErrorKind::InvalidParameter, "frame permutation must not be the identity");
  if (is_reversal_perm(perm))
    fail(ErrorKind::InvalidParameter,
         "frame permutation must not be the full reversal (collides with clip inversion)");
}

}  // namespace

ClipTensor permute_frames(const ClipTensor& clip, const std::vector<int>& perm) {
  check_frame_perm(perm, clip.t());
  Tensor out = Tensor::zeros(clip.tensor().shape());
  const size_t frame = clip.frame_size();
  for (int i = 0; i < clip.t(); ++i)
    std::copy_n(clip.tensor().data() + static_cast<size_t>(perm[static_cast<size_t>(i)]) * frame,
                frame, out.data() + static_cast<size_t>(i) * frame);
  return ClipTensor(std::move(out));
}

namespace {

constexpr double kOriginalProb = 1.0 / 8.0;

// All permutations of (0,1,2) except the identity, in a fixed order.
constexpr std::array<std::array<int, 3>, 5> kNonIdentityChannelPerms = {{
    {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

TransformSpec sample_parameters(TransformKind kind, Rng& rng, int clip_len) {
  TransformSpec spec;
  spec.kind = kind;
  switch (kind) {
    case TransformKind::Rotation:
      spec.rotation_degrees = 90 * (1 + static_cast<int>(rng.next_below(3)));
      break;
    case TransformKind::ColorSwitch:
      spec.channel_perm = kNonIdentityChannelPerms[rng.next_below(5)];
      break;
    case TransformKind::NoiseAddition:
      spec.noise_sigma = static_cast<real>(rng.next_uniform(0.1, 0.3));
      break;
    case TransformKind::FrameReplacement:
      spec.replaced_frame = static_cast<int>(rng.next_below(static_cast<uint64_t>(clip_len)));
      break;
    case TransformKind::ClipInversion:
      break;
    case TransformKind::SplitJoin:
      spec.partner_tag = rng.next_u64();
      spec.replaced_half = rng.next_below(2) == 0 ? SplitHalf::First : SplitHalf::Second;
      break;
    case TransformKind::Permutation: {
      std::vector<int> perm(static_cast<size_t>(clip_len));
      do {
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = clip_len - 1; i > 0; --i) {
          int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i + 1)));
          std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
        }
      } while (is_identity_perm(perm) || is_reversal_perm(perm));
      spec.frame_perm = std::move(perm);
      break;
    }
  }
  return spec;
}

bool kind_feasible(TransformKind kind, int clip_len) {
  if (kind == TransformKind::Permutation) return clip_len >= 3;
  if (kind == TransformKind::SplitJoin) return clip_len % 2 == 0;
  return true;
}

}  // namespace

std::vector<TransformSpec> sample_specs(Rng& rng, LabelMode mode, int clip_len,
                                        const std::vector<TransformKind>& allowed) {
  if (allowed.empty()) fail(ErrorKind::InvalidParameter, "allowed transform set is empty");
  std::vector<TransformKind> usable;
  for (TransformKind k : allowed) {
    if (std::find(usable.begin(), usable.end(), k) != usable.end()) continue;
    if (kind_feasible(k, clip_len)) usable.push_back(k);
  }
  if (usable.empty())
    fail(ErrorKind::InvalidParameter, "no allowed transform is feasible at this clip length");
  std::sort(usable.begin(), usable.end());

  std::vector<TransformSpec> specs;
  if (rng.next_unit() < kOriginalProb) return specs;  // untransformed original

  if (mode == LabelMode::MultiClass) {
    TransformKind kind = usable[rng.next_below(usable.size())];
    specs.push_back(sample_parameters(kind, rng, clip_len));
    return specs;
  }

  size_t k = 1 + rng.next_below(3);
  k = std::min(k, usable.size());
  // Partial Fisher-Yates picks k distinct kinds.
  std::vector<TransformKind> pool = usable;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + rng.next_below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  for (TransformKind kind : pool) specs.push_back(sample_parameters(kind, rng, clip_len));
  return specs;
}

std::pair<ClipTensor, TransformLabel> apply_specs(const ClipTensor& clip,
                                                  const std::vector<TransformSpec>& specs,
                                                  LabelMode mode, Rng& rng,
                                                  const PartnerSource& partner) {
  std::vector<TransformSpec> ordered = specs;
  std::sort(ordered.begin(), ordered.end(),
            [](const TransformSpec& a, const TransformSpec& b) { return a.kind < b.kind; });
  for (size_t i = 1; i < ordered.size(); ++i)
    if (ordered[i].kind == ordered[i - 1].kind)
      fail(ErrorKind::InvalidParameter, "duplicate transform kind in spec list");
  if (mode == LabelMode::MultiClass && ordered.size() > 1)
    fail(ErrorKind::InvalidParameter, "MultiClass mode admits at most one transform per clip");

  ClipTensor out = clip;
  TransformLabel label;
  label.mode = mode;
  for (const TransformSpec& spec : ordered) {
    switch (spec.kind) {
      case TransformKind::Rotation:
        out = rotate(out, spec.rotation_degrees);
        break;
      case TransformKind::ColorSwitch:
        out = color_switch(out, spec.channel_perm);
        break;
      case TransformKind::NoiseAddition:
        out = add_noise(out, spec.noise_sigma, rng);
        break;
      case TransformKind::FrameReplacement:
        out = replace_frame(out, spec.replaced_frame, rng);
        break;
      case TransformKind::ClipInversion:
        out = invert_clip(out);
        break;
      case TransformKind::SplitJoin: {
        const ClipTensor& other = partner ? partner(spec.partner_tag) : out;
        out = split_join(out, other, spec.replaced_half);
        break;
      }
      case TransformKind::Permutation:
        out = permute_frames(out, spec.frame_perm);
        break;
    }
    label.indicator[static_cast<size_t>(static_cast<int>(spec.kind) - 1)] = 1;
    label.class_id = static_cast<int>(spec.kind);
  }
  if (ordered.empty()) label.class_id = 0;
  return {std::move(out), label};
}

Tensor resize_bilinear(const Tensor& frames, int out_h, int out_w) {
  if (frames.rank() != 4) fail(ErrorKind::InvalidShape, "resize expects a (T,H,W,C) tensor");
  if (out_h < 1 || out_w < 1) fail(ErrorKind::InvalidParameter, "resize target must be positive");
  const int T = frames.dim(0), H = frames.dim(1), W = frames.dim(2), C = frames.dim(3);
  if (H == out_h && W == out_w) return frames;
  Tensor out = Tensor::zeros({T, out_h, out_w, C});
  const double sy = static_cast<double>(H) / out_h;
  const double sx = static_cast<double>(W) / out_w;
  const size_t in_row = static_cast<size_t>(W) * C;
  const size_t in_frame = static_cast<size_t>(H) * in_row;
  const size_t out_row = static_cast<size_t>(out_w) * C;
  const size_t out_frame = static_cast<size_t>(out_h) * out_row;
  for (int t = 0; t < T; ++t) {
    const real* f = frames.data() + static_cast<size_t>(t) * in_frame;
    real* g = out.data() + static_cast<size_t>(t) * out_frame;
    for (int y = 0; y < out_h; ++y) {
      // Half-pixel centers, clamped at the borders.
      double fy = (y + 0.5) * sy - 0.5;
      int y0 = static_cast<int>(std::floor(fy));
      double wy = fy - y0;
      int y1 = std::min(y0 + 1, H - 1);
      y0 = std::max(y0, 0);
      for (int x = 0; x < out_w; ++x) {
        double fx = (x + 0.5) * sx - 0.5;
        int x0 = static_cast<int>(std::floor(fx));
        double wx = fx - x0;
        int x1 = std::min(x0 + 1, W - 1);
        x0 = std::max(x0, 0);
        const real* p00 = f + static_cast<size_t>(y0) * in_row + static_cast<size_t>(x0) * C;
        const real* p01 = f + static_cast<size_t>(y0) * in_row + static_cast<size_t>(x1) * C;
        const real* p10 = f + static_cast<size_t>(y1) * in_row + static_cast<size_t>(x0) * C;
        const real* p11 = f + static_cast<size_t>(y1) * in_row + static_cast<size_t>(x1) * C;
        real* q = g + static_cast<size_t>(y) * out_row + static_cast<size_t>(x) * C;
        for (int c = 0; c < C; ++c) {
          double top = (1.0 - wx) * p00[c] + wx * p01[c];
          double bot = (1.0 - wx) * p10[c] + wx * p11[c];
          q[c] = static_cast<real>((1.0 - wy) * top + wy * bot);
        }
      }
    }
  }
  return out;
}

ClipTensor preprocess(const Tensor& frames, int short_edge, int crop, CropMode mode, Rng* rng) {
  if (frames.rank() != 4) fail(ErrorKind::InvalidShape, "preprocess expects a (T,H,W,C) tensor");
  if (crop > short_edge)
    fail(ErrorKind::InvalidParameter, "crop size exceeds the resized short edge");
  if (crop < 1 || short_edge < 1) fail(ErrorKind::InvalidParameter, "crop and short edge must be positive");
  if (mode == CropMode::Random && rng == nullptr)
    fail(ErrorKind::InvalidParameter, "random crop requires an rng");
  const int H = frames.dim(1), W = frames.dim(2);
  int out_h, out_w;
  if (H <= W) {
    out_h = short_edge;
    out_w = static_cast<int>(std::llround(static_cast<double>(W) * short_edge / H));
  } else {
    out_w = short_edge;
    out_h = static_cast<int>(std::llround(static_cast<double>(H) * short_edge / W));
  }
  const bool resampled = (out_h != H || out_w != W);
  Tensor resized = resize_bilinear(frames, out_h, out_w);
  if (resampled) {
    // Interpolation may overshoot [0,1] by an ulp.
    for (size_t i = 0; i < resized.size(); ++i)
      resized[i] = std::clamp(resized[i], real(0), real(1));
  }
  int max_oy = out_h - crop;
  int max_ox = out_w - crop;
  int oy, ox;
  if (mode == CropMode::Random) {
    oy = static_cast<int>(rng->next_below(static_cast<uint64_t>(max_oy + 1)));
    ox = static_cast<int>(rng->next_below(static_cast<uint64_t>(max_ox + 1)));
  } else {
    oy = max_oy / 2;
    ox = max_ox / 2;
  }
  const int T = resized.dim(0), C = resized.dim(3);
  if (oy == 0 && ox == 0 && out_h == crop && out_w == crop)
    return ClipTensor(std::move(resized));
  Tensor out = Tensor::zeros({T, crop, crop, C});
  const size_t in_row = static_cast<size_t>(out_w) * C;
  const size_t in_frame = static_cast<size_t>(out_h) * in_row;
  const size_t out_row = static_cast<size_t>(crop) * C;
  const size_t out_frame = static_cast<size_t>(crop) * out_row;
  for (int t = 0; t < T; ++t) {
    const real* f = resized.data() + static_cast<size_t>(t) * in_frame +
                    static_cast<size_t>(oy) * in_row + static_cast<size_t>(ox) * C;
    real* g = out.data() + static_cast<size_t>(t) * out_frame;
    for (int y = 0; y < crop; ++y)
      std::copy_n(f + static_cast<size_t>(y) * in_row, out_row, g + static_cast<size_t>(y) * out_row);
  }
  return ClipTensor(std::move(out));
}

}  // namespace sslv
