#ifndef WPT_CHECKPOINT_HPP_
#define WPT_CHECKPOINT_HPP_

#include <filesystem>
#include <iosfwd>

#include "wpt/trpo.hpp"

namespace wpt {

inline constexpr int kCheckpointVersion = 1;

/// Layout:
///   8 bytes   magic "WPTCKPT\0"
///   8 bytes   header length H, unsigned little-endian
///   H bytes   UTF-8 JSON header (format version, layer sizes, normalizer statistics)
///   payload   IEEE-754 float64 little-endian: policy mean network, log-std, value network
void save_checkpoint(std::ostream& out, const Agent& agent);
void save_checkpoint(const std::filesystem::path& path, const Agent& agent);

Agent load_checkpoint(std::istream& in);
Agent load_checkpoint(const std::filesystem::path& path);

}  // namespace wpt

#endif  // WPT_CHECKPOINT_HPP_
