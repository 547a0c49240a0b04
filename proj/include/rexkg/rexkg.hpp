#pragma once

// Umbrella header. The remote embedding provider lives in embed_remote.hpp
// and is not pulled in here.

#include "rexkg/analysis.hpp"
#include "rexkg/builder.hpp"
#include "rexkg/config.hpp"
#include "rexkg/corpus.hpp"
#include "rexkg/embed.hpp"
#include "rexkg/errors.hpp"
#include "rexkg/graph.hpp"
#include "rexkg/lexicon.hpp"
#include "rexkg/manifest.hpp"
#include "rexkg/metrics.hpp"
#include "rexkg/synth.hpp"
#include "rexkg/text.hpp"
#include "rexkg/types.hpp"
