#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctaes/mat.hpp"

namespace ctaes::train {

// Single-archive container: magic + version, a JSON metadata record, then
// named double tensors. Doubles are stored raw (little-endian), so a
// save/load round trip is bit-exact.
struct CheckpointData {
    std::string meta_json;
    std::vector<std::pair<std::string, Mat>> tensors;

    const Mat* find(const std::string& name) const;
    const Mat& require(const std::string& name) const; // VersionError if missing
};

void write_checkpoint_file(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint_file(const std::string& path);

} // namespace ctaes::train
