#pragma once

// Umbrella header.

#include "admitrec/container.hpp"
#include "admitrec/core.hpp"
#include "admitrec/diffops.hpp"
#include "admitrec/fdfd.hpp"
#include "admitrec/fields.hpp"
#include "admitrec/grid.hpp"
#include "admitrec/noise.hpp"
#include "admitrec/parallel.hpp"
#include "admitrec/plane_wave.hpp"
#include "admitrec/recon_aniso.hpp"
#include "admitrec/recon_iso.hpp"
#include "admitrec/report.hpp"
#include "admitrec/tensor_algebra.hpp"
