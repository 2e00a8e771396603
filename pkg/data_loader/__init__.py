# Data loader module
