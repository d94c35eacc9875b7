#pragma once

// Umbrella header for the airway-segmentation pipeline.

#include "airseg/errors.hpp"
#include "airseg/gradcheck.hpp"
#include "airseg/loss.hpp"
#include "airseg/net_gradcheck.hpp"
#include "airseg/ops.hpp"
#include "airseg/optim.hpp"
#include "airseg/params.hpp"
#include "airseg/phantom.hpp"
#include "airseg/postprocess.hpp"
#include "airseg/preprocess.hpp"
#include "airseg/run_config.hpp"
#include "airseg/tensor.hpp"
#include "airseg/trainer.hpp"
#include "airseg/u2net.hpp"
#include "airseg/volume.hpp"
#include "airseg/volume_io.hpp"
