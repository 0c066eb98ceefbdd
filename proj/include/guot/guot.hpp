#pragma once

#include "guot/asymptotics.hpp"
#include "guot/certificate.hpp"
#include "guot/closed_form.hpp"
#include "guot/gaussian.hpp"
#include "guot/grid_benchmark.hpp"
#include "guot/linalg.hpp"
#include "guot/report.hpp"
#include "guot/rng.hpp"
#include "guot/version.hpp"
