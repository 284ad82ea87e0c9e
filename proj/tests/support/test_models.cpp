#include "test_models.hpp"
