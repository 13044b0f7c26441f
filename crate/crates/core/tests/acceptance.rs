// placeholder; filled in as modules land
