#pragma once

#include "navigscene/adamw.hpp"
#include "navigscene/candidates.hpp"
#include "navigscene/errors.hpp"
#include "navigscene/fusion.hpp"
#include "navigscene/geo.hpp"
#include "navigscene/jsonl.hpp"
#include "navigscene/npo.hpp"
#include "navigscene/pipeline.hpp"
#include "navigscene/rng.hpp"
#include "navigscene/routesim.hpp"
#include "navigscene/selector.hpp"
