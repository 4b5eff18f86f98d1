#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sslv/clip.hpp"
#include "sslv/rng.hpp"

namespace sslv {

// Fixed pseudo-label index map. 0 is reserved for the untransformed clip.
enum class TransformKind : int {
  Rotation = 1,
  ColorSwitch = 2,
  NoiseAddition = 3,
  FrameReplacement = 4,
  ClipInversion = 5,
  SplitJoin = 6,
  Permutation = 7,
};

constexpr int kNumTransforms = 7;

const char* to_string(TransformKind kind);
std::optional<TransformKind> transform_kind_from_string(const std::string& name);

enum class LabelMode { MultiClass, MultiLabel };

// Applied-transform record: a single class id 0..7 in MultiClass mode, or a
// 7-bit indicator vector in MultiLabel mode (bit m-1 set iff transform m was
// applied; all zeros for the untransformed clip).
struct TransformLabel {
  LabelMode mode = LabelMode::MultiClass;
  int class_id = 0;
  std::array<uint8_t, kNumTransforms> indicator{};
};

enum class SplitHalf { First, Second };

// Kind plus the kind-specific parameters needed to reproduce an application.
struct TransformSpec {
  TransformKind kind = TransformKind::Rotation;
  int rotation_degrees = 90;                 // Rotation: 90, 180 or 270
  std::array<int, 3> channel_perm{0, 1, 2};  // ColorSwitch: not the identity
  real noise_sigma = real(0.1);              // NoiseAddition: in [0.1, 0.3]
  int replaced_frame = 0;                    // FrameReplacement: in [0, T)
  uint64_t partner_tag = 0;                  // SplitJoin: resolved by the caller
  SplitHalf replaced_half = SplitHalf::First;
  std::vector<int> frame_perm;               // Permutation: not identity, not reversal

  std::string describe() const;  // json-like one-liner
};

// --- the seven transformations -------------------------------------------

// Clockwise rotation of every frame. 90/270 require square frames.
ClipTensor rotate(const ClipTensor& clip, int degrees);

// Output channel c takes input channel perm[c]; perm must not be identity.
ClipTensor color_switch(const ClipTensor& clip, const std::array<int, 3>& perm);

// clamp(clip + gaussian(0, sigma), 0, 1) with sigma in [0.1, 0.3].
ClipTensor add_noise(const ClipTensor& clip, real sigma, Rng& rng);

// Replaces frame t with i.i.d. uniform [0,1) noise.
ClipTensor replace_frame(const ClipTensor& clip, int t, Rng& rng);

// Temporal reversal: output frame t = input frame T-1-t.
ClipTensor invert_clip(const ClipTensor& clip);

// Replaces the designated temporal half with the same-index half of partner.
// Requires matching shapes and even T.
ClipTensor split_join(const ClipTensor& clip, const ClipTensor& partner, SplitHalf replaced);

// Output frame i = input frame perm[i]; perm must be neither the identity
// nor the full reversal (those collide with label 0 / ClipInversion).
ClipTensor permute_frames(const ClipTensor& clip, const std::vector<int>& perm);

// --- sampling and application ---------------------------------------------

// Draws the transforms for one clip. MultiClass: probability 1/8 of none,
// otherwise one kind uniform over `allowed`. MultiLabel: probability 1/8 of
// none, otherwise k ~ Uniform{1,2,3} distinct kinds. Kinds whose
// preconditions cannot hold at this clip length (Permutation needs T >= 3,
// SplitJoin needs even T) are dropped from `allowed` first.
std::vector<TransformSpec> sample_specs(Rng& rng, LabelMode mode, int clip_len,
                                        const std::vector<TransformKind>& allowed);

// Resolves a SplitJoin partner_tag to the partner clip; the pretraining loop
// maps tags onto other members of the mini-batch.
using PartnerSource = std::function<const ClipTensor&(uint64_t tag)>;

// Applies specs in ascending kind order and returns the transformed clip and
// its pseudo label. Specs must be pairwise distinct in kind.
std::pair<ClipTensor, TransformLabel> apply_specs(const ClipTensor& clip,
                                                  const std::vector<TransformSpec>& specs,
                                                  LabelMode mode, Rng& rng,
                                                  const PartnerSource& partner = nullptr);

// --- spatial preprocessing -------------------------------------------------

enum class CropMode { Random, Center };

// Resizes every frame so min(H, W) == short_edge (bilinear, aspect kept; a
// no-op when the short edge already matches), then takes one crop x crop
// window shared by all frames: uniformly random offset in Random mode,
// centered otherwise.
ClipTensor preprocess(const Tensor& frames, int short_edge, int crop, CropMode mode,
                      Rng* rng = nullptr);

// Bilinear frame-wise resize of a (T,H,W,C) tensor to (T,out_h,out_w,C).
Tensor resize_bilinear(const Tensor& frames, int out_h, int out_w);

std::vector<int> all_transform_kinds_as_ints();
std::vector<TransformKind> all_transform_kinds();

}  // namespace sslv
