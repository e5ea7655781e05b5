#pragma once

#include "proxytd/errors.hpp"
#include "proxytd/random.hpp"
#include "proxytd/core.hpp"
#include "proxytd/noisegen.hpp"
#include "proxytd/aggregation.hpp"
#include "proxytd/estimators.hpp"
#include "proxytd/pipelines.hpp"
#include "proxytd/dataio.hpp"
#include "proxytd/experiments.hpp"
