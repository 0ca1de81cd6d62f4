#pragma once

#include "nbpower/core.hpp"
#include "nbpower/energy.hpp"
#include "nbpower/io.hpp"
#include "nbpower/profiles.hpp"
#include "nbpower/radio.hpp"
#include "nbpower/segment.hpp"
#include "nbpower/statemachine.hpp"
#include "nbpower/tracesynth.hpp"
