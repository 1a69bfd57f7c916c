#pragma once

#include <string>
#include <vector>

#include "eslsc/qdata.hpp"

namespace fixtures {

// The two-blank modal question used as the running example, keyed by the
// modal-pair rule: a deduction ("he hates black") takes "must ... can't".
inline const std::string kModalSampleStem =
    "\xE2\x80\x94 That T-shirt with Yao Ming's picture on it ___ belong to John. He likes him a lot. "
    "\xE2\x80\x94 No, it ___ be his. He hates black color.";

inline const std::vector<std::string> kModalSampleOptions = {"can; can't", "may; needn't", "must; mustn't",
                                                        "must; can't"};

inline eslsc::ScQuestion modal_sample(std::optional<int> answer = 3) {
  return eslsc::ScQuestion("sample-modal-00000", kModalSampleStem, kModalSampleOptions, answer, "test");
}

}  // namespace fixtures
