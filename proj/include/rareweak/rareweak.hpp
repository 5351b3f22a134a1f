#pragma once

#include "rareweak/apps.hpp"
#include "rareweak/classify.hpp"
#include "rareweak/detect.hpp"
#include "rareweak/errors.hpp"
#include "rareweak/graph.hpp"
#include "rareweak/io.hpp"
#include "rareweak/models.hpp"
#include "rareweak/numerics.hpp"
#include "rareweak/parallel.hpp"
#include "rareweak/phase.hpp"
#include "rareweak/select.hpp"
#include "rareweak/sym_matrix.hpp"
