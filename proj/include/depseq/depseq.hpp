#pragma once

#include "depseq/codec.hpp"
#include "depseq/ctc.hpp"
#include "depseq/metrics.hpp"
#include "depseq/oracle.hpp"
#include "depseq/recovery.hpp"
#include "depseq/simulate.hpp"
#include "depseq/strings.hpp"
#include "depseq/treebank.hpp"
