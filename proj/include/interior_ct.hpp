#pragma once

#include "interior_ct/error.hpp"
#include "interior_ct/parallel.hpp"
#include "interior_ct/geometry.hpp"
#include "interior_ct/image.hpp"
#include "interior_ct/phantom.hpp"
#include "interior_ct/projector.hpp"
#include "interior_ct/fft.hpp"
#include "interior_ct/fbp.hpp"
#include "interior_ct/hilbert.hpp"
#include "interior_ct/finite_inversion.hpp"
#include "interior_ct/dbp.hpp"
#include "interior_ct/tv_pocs.hpp"
#include "interior_ct/metrics.hpp"
#include "interior_ct/io.hpp"
#include "interior_ct/dataset.hpp"
