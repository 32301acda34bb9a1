#pragma once

#include "parasitometrics/calibration.hpp"
#include "parasitometrics/curves.hpp"
#include "parasitometrics/datamodel.hpp"
#include "parasitometrics/error.hpp"
#include "parasitometrics/io.hpp"
#include "parasitometrics/metrics.hpp"
#include "parasitometrics/poisson.hpp"
#include "parasitometrics/quant.hpp"
#include "parasitometrics/simulator.hpp"
#include "parasitometrics/stats.hpp"
