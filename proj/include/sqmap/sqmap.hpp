#pragma once

#include "sqmap/association.hpp"
#include "sqmap/camera.hpp"
#include "sqmap/common.hpp"
#include "sqmap/evaluation.hpp"
#include "sqmap/geometry.hpp"
#include "sqmap/io.hpp"
#include "sqmap/landmark.hpp"
#include "sqmap/mapper.hpp"
#include "sqmap/outlier_filter.hpp"
#include "sqmap/pose_estimation.hpp"
#include "sqmap/scene.hpp"
#include "sqmap/shape_fit.hpp"
#include "sqmap/simulator.hpp"
#include "sqmap/statistics.hpp"
