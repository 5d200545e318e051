#pragma once

#include "repel/errors.hpp"
#include "repel/generational_set.hpp"
#include "repel/io.hpp"
#include "repel/minimizer.hpp"
#include "repel/point_config.hpp"
#include "repel/repulsion.hpp"
#include "repel/riesz_energy.hpp"
#include "repel/version.hpp"
