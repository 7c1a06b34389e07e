# Tests package for pivotsat
