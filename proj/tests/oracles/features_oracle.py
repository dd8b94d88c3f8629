#!/usr/bin/env python3
# Copyright 2026 The fedsim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Reference per-axis features, computed with numpy.

The printed constants are frozen into tests/features_test.cc.
"""

import numpy as np


def axis_features(x):
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean()
    var = x.var()  # population
    c = x - mean
    kurt = np.mean(c**4) / var**2 - 3.0
    skew = np.mean(c**3) / var**1.5
    zcr = np.count_nonzero(c[:-1] * c[1:] < 0) / (len(x) - 1)
    peaks = np.count_nonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:]))
    return [mean, var, np.sqrt(var), np.median(x), np.mean(x * x), kurt, skew,
            zcr, float(peaks), var, x.max() - x.min()]


def emit(name, values):
    body = ",\n    ".join(repr(float(v)) for v in values)
    print(f"constexpr double {name}[] = {{\n    {body}}};")


def main():
    t = np.arange(64)
    emit("kSineFeatures", axis_features(2.0 * np.sin(2.0 * np.pi * t / 64.0)))
    emit("kIrregularFeatures",
         axis_features([3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, -6.0, 5.0, 3.0]))
    emit("kOddLengthFeatures", axis_features([0.5, 2.5, -1.0, 7.0, 3.0, 3.0, -2.0]))


if __name__ == "__main__":
    main()
