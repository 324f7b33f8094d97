// nothing here
/* just
   commentary */
