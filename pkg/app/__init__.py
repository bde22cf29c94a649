# gadgetgrade: gadget-quality metrics for ROP gadget dumps
