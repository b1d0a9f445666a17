"""Physics core: atom model, fields and the two cell layouts."""
