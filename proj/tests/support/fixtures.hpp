#pragma once

// Shared hand-written fixtures.

#include <string>

#include "depseq/depseq.hpp"

namespace testsupport {

inline depseq::DepTree example_tree() {
  depseq::DepTree tree;
  tree.sentence_id = "ex1";
  tree.tokens = {{"est", "VRB", 0, "root"},
                 {"un", "DET", 3, "spe"},
                 {"probléme", "NOM", 1, "dep"}};
  return tree;
}

inline depseq::LabelRegistry example_registry() {
  return depseq::LabelRegistry({"NOM", "VRB", "DET"}, {"root", "dep", "spe"}, 5);
}

inline const std::string kExampleSequence =
    "est<POS1><L1><REL0> un<POS2><R1><REL2> probléme<POS0><L2><REL1>";

// Chain tree w1 <- w2 <- w3 with w1 as root.
inline depseq::DepTree chain3_tree() {
  depseq::DepTree tree;
  tree.sentence_id = "chain3";
  tree.tokens = {{"w1", "P1", 0, "root"}, {"w2", "P2", 1, "ra"}, {"w3", "P3", 2, "rb"}};
  return tree;
}

}  // namespace testsupport
