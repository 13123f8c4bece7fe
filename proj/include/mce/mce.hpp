#pragma once

#include "mce/errors.hpp"
#include "mce/rng.hpp"
#include "mce/numkit.hpp"
#include "mce/dataset.hpp"
#include "mce/kernels.hpp"
#include "mce/estimators.hpp"
#include "mce/datagen.hpp"
#include "mce/richness.hpp"
#include "mce/bounds.hpp"
#include "mce/io.hpp"
#include "mce/harness.hpp"
