#pragma once

#include "recband/config.hpp"
#include "recband/environment.hpp"
#include "recband/errors.hpp"
#include "recband/fixtures.hpp"
#include "recband/gp.hpp"
#include "recband/harness.hpp"
#include "recband/kernel.hpp"
#include "recband/lookahead.hpp"
#include "recband/planner.hpp"
#include "recband/policies.hpp"
#include "recband/presets.hpp"
#include "recband/rng.hpp"
