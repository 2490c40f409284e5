#pragma once

// End-to-end pipeline. Encoding runs frame -> LPC analysis -> residual
// scaling -> neural encode -> Huffman -> stream; decoding inverts it and
// overlap-adds the synthesized frames.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "harpnet/model.hpp"
#include "harpnet/stream.hpp"

namespace harpnet {

// Scaled LPC residual of every frame, the network's training input.
std::vector<std::vector<Real>> residual_frames(std::span<const Real> signal, const ModelConfig& config);

// Runs `fn(i)` for i in [0, count) on up to `jobs` threads. The first
// exception thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

// Requires fitted codebooks (kConfig otherwise). Output is independent of
// `jobs`.
EncodedStream encode_signal(const HarpNetModel& model, std::span<const Real> signal, std::uint32_t sample_rate,
                            unsigned jobs = 1);

// Throws kModelMismatch when the header disagrees with the model and
// kCorruptStream for malformed payloads.
std::vector<Real> decode_signal(const HarpNetModel& model, const EncodedStream& stream, unsigned jobs = 1);

void check_compatible(const HarpNetModel& model, const StreamHeader& header);

}  // namespace harpnet
