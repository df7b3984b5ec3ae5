#pragma once

#include "analysis.hpp"
#include "charge_model.hpp"
#include "circuit_coupling.hpp"
#include "constants.hpp"
#include "dynamics.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "image_charges.hpp"
#include "linalg.hpp"
#include "linear_cooling.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "rotor_kinematics.hpp"
#include "trap_fields.hpp"
