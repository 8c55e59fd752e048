# Controllers package

