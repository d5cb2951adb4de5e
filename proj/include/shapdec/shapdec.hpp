#pragma once

#include "shapdec/core.hpp"
#include "shapdec/distributions.hpp"
#include "shapdec/engine.hpp"
#include "shapdec/errors.hpp"
#include "shapdec/experiments.hpp"
#include "shapdec/external_model.hpp"
#include "shapdec/io.hpp"
#include "shapdec/model_io.hpp"
#include "shapdec/models.hpp"
#include "shapdec/stats.hpp"
#include "shapdec/viz.hpp"
