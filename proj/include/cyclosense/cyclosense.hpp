#pragma once

#include "cyclosense/common.hpp"
#include "cyclosense/config.hpp"
#include "cyclosense/cyclic_stats.hpp"
#include "cyclosense/detectors.hpp"
#include "cyclosense/iq_file.hpp"
#include "cyclosense/montecarlo.hpp"
#include "cyclosense/report.hpp"
#include "cyclosense/signal_model.hpp"
