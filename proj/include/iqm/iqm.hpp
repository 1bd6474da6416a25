// iqm.hpp
// Umbrella header.
#pragma once

#include "iqm/bell.hpp"
#include "iqm/coding.hpp"
#include "iqm/config.hpp"
#include "iqm/domain.hpp"
#include "iqm/errors.hpp"
#include "iqm/locality_scan.hpp"
#include "iqm/micro_worlds.hpp"
#include "iqm/protocol.hpp"
#include "iqm/quantum.hpp"
#include "iqm/reports.hpp"
#include "iqm/rng.hpp"
#include "iqm/spacetime.hpp"
#include "iqm/tree.hpp"
