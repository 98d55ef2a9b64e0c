#pragma once

#include <cstdint>
#include <string>

#include "ctaes/corpus.hpp"

namespace ctaes::synth {

// Desk-scale corpus: two source topics and one target topic whose essays
// carry a real score signal (quality-marker word mix), a per-topic
// vocabulary shift, and a target-only shift plus longer essays, so
// cross-topic transfer is non-trivial but learnable.
struct SynthSpec {
    int essays_per_topic = 400;
    std::uint64_t seed = 7;
};

inline constexpr int kSynthSourceA = 101;
inline constexpr int kSynthSourceB = 102;
inline constexpr int kSynthTarget = 103;

corpus::TopicRegistry synth_registry();

// Fully labeled TSV in the standard dataset layout (header + one row per
// essay); feed through the regular loader.
std::string synth_dataset_tsv(const SynthSpec& spec);

} // namespace ctaes::synth
