#pragma once

#include "polarnet/core.hpp"
#include "polarnet/hash.hpp"
#include "polarnet/event.hpp"
#include "polarnet/activity.hpp"
#include "polarnet/corpus.hpp"
#include "polarnet/labels.hpp"
#include "polarnet/provider.hpp"
#include "polarnet/annotate.hpp"
#include "polarnet/graph.hpp"
#include "polarnet/blockmodel.hpp"
#include "polarnet/stance_groups.hpp"
#include "polarnet/metrics.hpp"
#include "polarnet/crosstopic.hpp"
#include "polarnet/synthetic.hpp"
#include "polarnet/config.hpp"
#include "polarnet/report.hpp"
#include "polarnet/pipeline.hpp"
