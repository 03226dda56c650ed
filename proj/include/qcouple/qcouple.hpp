#ifndef QCOUPLE_QCOUPLE_HPP
#define QCOUPLE_QCOUPLE_HPP

#include "qcouple/admission.hpp"
#include "qcouple/billing.hpp"
#include "qcouple/distributions.hpp"
#include "qcouple/energy.hpp"
#include "qcouple/errors.hpp"
#include "qcouple/numerics.hpp"
#include "qcouple/scenario.hpp"
#include "qcouple/simulator.hpp"

#endif
