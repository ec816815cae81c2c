#pragma once

#include "aion/calculus.hpp"
#include "aion/cli.hpp"
#include "aion/config.hpp"
#include "aion/demo.hpp"
#include "aion/errors.hpp"
#include "aion/harness.hpp"
#include "aion/io.hpp"
#include "aion/model.hpp"
#include "aion/solvers.hpp"
