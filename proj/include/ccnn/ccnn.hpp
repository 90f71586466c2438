#pragma once

// Umbrella header for the continuous-kernel convolution library.

#include "tensor.hpp"
#include "tape.hpp"
#include "rng.hpp"
#include "threads.hpp"
#include "ops.hpp"
#include "fft.hpp"
#include "conv.hpp"
#include "kernel_net.hpp"
#include "layers.hpp"
#include "pointcloud.hpp"
#include "blocks.hpp"
#include "model.hpp"
#include "optim.hpp"
#include "gradcheck.hpp"
#include "data.hpp"
#include "config.hpp"
#include "serialize.hpp"
#include "train.hpp"
