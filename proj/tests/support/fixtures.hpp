// Paths and inputs shared by the unit tests.
#pragma once

#include <filesystem>
#include <string>

#include "kfqg/pipeline.hpp"

namespace fixtures {

inline const std::filesystem::path kRoot = KFQG_SOURCE_DIR;

inline std::filesystem::path path(const std::string& rel) { return kRoot / rel; }

inline kfqg::PipelineConfig mock_config() { return kfqg::PipelineConfig::load(path("configs/mock.json")); }

inline const kfqg::QAPair& speed_of_sound() {
  static const kfqg::QAPair qa{
      "Why is the speed of sound constant?",
      "The speed of sound is not constant. It depends on the temperature of the medium (and indeed what the medium "
      "is made of). It's mathematical formula is square root (specific heat ratio × gas constant × temperature). "
      "Loudness is a measure of intensity not speed. Being louder doesn't mean you're heard quicker, it means "
      "you're heard more prominently."};
  return qa;
}

}  // namespace fixtures
