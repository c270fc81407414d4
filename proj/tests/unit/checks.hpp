#pragma once

#include <doctest.h>

#include "support.hpp"

// Expects `expr` to throw virtcam::Error with the given code.
#define CHECK_CODE(expr, c)                                   \
    do {                                                      \
        bool thrown_ = false;                                 \
        try {                                                 \
            (void)(expr);                                     \
        } catch (const virtcam::Error& e_) {                  \
            thrown_ = true;                                   \
            CHECK_MESSAGE(e_.code() == (c), e_.what());       \
        }                                                     \
        CHECK_MESSAGE(thrown_, "expected " #c " from " #expr); \
    } while (0)
