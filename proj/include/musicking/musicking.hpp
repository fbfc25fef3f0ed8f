#ifndef MUSICKING_HPP
#define MUSICKING_HPP

#include "analytics.hpp"
#include "cluster.hpp"
#include "core.hpp"
#include "error.hpp"
#include "ingest.hpp"
#include "numeric.hpp"
#include "pipeline.hpp"
#include "quality.hpp"
#include "report.hpp"
#include "stats.hpp"
#include "svg.hpp"
#include "timing.hpp"

#endif
