namespace yieldcast {}
