#pragma once

#include "freight/box_tree.hpp"
#include "freight/calibration.hpp"
#include "freight/config.hpp"
#include "freight/error.hpp"
#include "freight/geo.hpp"
#include "freight/histogram.hpp"
#include "freight/ingest.hpp"
#include "freight/model.hpp"
#include "freight/parallel.hpp"
#include "freight/pipeline.hpp"
#include "freight/polygon.hpp"
#include "freight/spatial.hpp"
#include "freight/stats.hpp"
#include "freight/stops.hpp"
#include "freight/synth.hpp"
#include "freight/text.hpp"
#include "freight/time.hpp"
#include "freight/trips.hpp"
#include "freight/wkt.hpp"
